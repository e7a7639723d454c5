# lkengine/checks.py
"""Named invariant suites run by ``lk check <name>``.

Each suite returns a CheckResult; the CLI exits non-zero when it fails.
"""
import logging
from dataclasses import dataclass, field

import numpy as np

from lkengine.extensions import WorkerPool
from lkengine.geometry import zoo
from lkengine.geometry.blocklin import block_inverse_report, random_blocks
from lkengine.geometry.metricfield import MetricJet
from lkengine.geometry.quadrature import QuadratureSettings, volume
from lkengine.geometry.submersion import DEFAULT_SCHEDULE, collapsed_metric, validate, volume_scaling_check
from lkengine.geometry.tensorcore import curvature_bundle
from lkengine.geometry.tubeoracle import TubeSettings, tube_volume_mc
from lkengine.geometry.weylsum import compute_intrinsic_volume, gb_density_pfaffian, intrinsic_volume, lk_density

logger = logging.getLogger(__name__)


@dataclass
class CheckResult:
    name: str
    passed: bool = True
    lines: list = field(default_factory=list)

    def record(self, label: str, ok: bool, detail: str = ""):
        self.lines.append(f"{'✅' if ok else '❌'} {label}" + (f": {detail}" if detail else ""))
        self.passed = self.passed and bool(ok)
        if not ok:
            logger.warning(f"check {self.name} failed: {label} {detail}")

    def to_dict(self) -> dict:
        return {"name": self.name, "pass": self.passed, "lines": list(self.lines)}


def random_metric_jet(rng: np.random.Generator, n: int, scale: float = 0.3) -> MetricJet:
    """Random SPD metric with derivatives carrying the symmetries of a real jet"""
    a = rng.normal(size=(n, n))
    g = a @ a.T + n * np.eye(n)
    dg = scale * rng.normal(size=(n, n, n))
    dg = 0.5 * (dg + np.swapaxes(dg, -1, -2))
    ddg = scale * rng.normal(size=(n, n, n, n))
    ddg = 0.5 * (ddg + np.swapaxes(ddg, -1, -2))
    ddg = 0.5 * (ddg + np.swapaxes(ddg, 0, 1))
    return MetricJet(g, dg, ddg)


def gauss_bonnet(settings=None, pool=None) -> CheckResult:
    result = CheckResult("gauss-bonnet")
    cases = [(f"sphere r={r}", zoo.sphere(r), 2.0) for r in (0.5, 1.0, 2.0)]
    cases += [("flat_torus", zoo.flat_torus(), 0.0), ("ring_torus", zoo.ring_torus(), 0.0)]
    for label, entry, chi in cases:
        value = intrinsic_volume(entry.atlas, 0, settings=settings, pool=pool)
        result.record(label, abs(value - chi) <= 1e-6, f"V_0 = {value:.9g}, expected {chi:g}")
    return result


VOLUME_ENTRIES = ("sphere", "sphere?n=3", "flat_torus", "ring_torus", "product_s2_s1", "warped_s2_over_s1",
                  "coupled_t2_over_s1")


def volume_agreement(settings=None, pool=None) -> CheckResult:
    result = CheckResult("volume")
    for spec in VOLUME_ENTRIES:
        entry = zoo.resolve(f"zoo:{spec}")
        n = entry.dim
        expected = entry.reference("volume")
        value = intrinsic_volume(entry.atlas, n, settings=settings, pool=pool)
        error = abs(value - expected) / abs(expected)
        result.record(spec, error <= 1e-6, f"V_{n} = {value:.9g}, reference {expected:.9g}")
    return result


def parity(settings=None, pool=None) -> CheckResult:
    result = CheckResult("parity")
    for spec in ("sphere", "sphere?n=3", "ring_torus", "warped_s2_over_s1"):
        entry = zoo.resolve(f"zoo:{spec}")
        n = entry.dim
        for i in range(n + 1):
            if (n - i) % 2:
                outcome = compute_intrinsic_volume(entry.atlas, i, settings=settings, pool=pool)
                result.record(f"{spec} V_{i}", outcome.value == 0.0 and not outcome.computed)
    return result


def pfaffian_agreement(settings=None, pool=None, count: int = 100, seed: int = 11) -> CheckResult:
    result = CheckResult("pfaffian")
    rng = np.random.default_rng(seed)
    for n in (2, 4):
        worst = 0.0
        for _ in range(count):
            bundle = curvature_bundle(random_metric_jet(rng, n))
            weyl = float(lk_density(bundle, n))
            pf = float(gb_density_pfaffian(bundle))
            worst = max(worst, abs(weyl - pf) / max(1.0, abs(weyl), abs(pf)))
        result.record(f"dimension {n}", worst <= 1e-8, f"worst relative gap {worst:.3g}")
    return result


def block_inverse(settings=None, pool=None, count: int = 100, seed: int = 7) -> CheckResult:
    result = CheckResult("block-inverse")
    rng = np.random.default_rng(seed)
    grid = tuple(2.0 ** -k for k in range(4, 15))
    bad_slope = bad_sup = 0
    worst_dense = 0.0
    for _ in range(count):
        p, q = rng.integers(1, 4, size=2)
        report = block_inverse_report(*random_blocks(rng, int(p), int(q)), grid)
        bad_slope += abs(report.lower_right_slope - 1.0) > 0.15
        bad_sup += max(report.upper_left_sup, report.off_diagonal_sup) > 1e3
        worst_dense = max(worst_dense, report.dense_agreement)
    result.record("lower-right slope 1", bad_slope == 0, f"{bad_slope} of {count} outside 1 +- 0.15")
    result.record("bounded blocks", bad_sup == 0, f"{bad_sup} of {count} unbounded")
    result.record("dense agreement", worst_dense <= 1e-8, f"{worst_dense:.3g}")
    return result


def volume_form(settings=None, pool=None) -> CheckResult:
    result = CheckResult("volume-form")
    for name in zoo.SUBMERSIONS:
        sc = zoo.make(name).submersion
        worst = max(volume_scaling_check(sc, eps, 64) for eps in DEFAULT_SCHEDULE)
        result.record(name, worst <= 1e-10, f"max relative deviation {worst:.3g}")
    return result


def validate_zoo(settings=None, pool=None) -> CheckResult:
    result = CheckResult("validate-zoo")
    for name in zoo.SUBMERSIONS:
        report = validate(zoo.make(name).submersion)
        result.record(name, report.passed, f"residual {report.residual:.3g}")
    return result


def determinism(settings=None, pool=None) -> CheckResult:
    """Bitwise-equal results at 1, 2 and 8 workers"""
    result = CheckResult("determinism")
    settings = settings or QuadratureSettings()
    warped = zoo.make("warped_s2_over_s1").submersion
    embedded = zoo.make("sphere2_embedded").embedding
    tube = TubeSettings(cloud_points=20_000, batch_size=25_000)
    runs = {}
    for count in (1, 2, 8):
        workers = WorkerPool(count)
        runs[count] = (
            volume(zoo.sphere().atlas, settings=settings, pool=workers),
            intrinsic_volume(warped.total, 1, collapsed_metric(warped, 0.125), settings, workers),
            tube_volume_mc(embedded, 0.1, 100_000, 42, tube, workers).estimate,
        )
    for count in (2, 8):
        same = all(a == b for a, b in zip(runs[1], runs[count]))
        result.record(f"{count} workers", same, " ".join(f"{v!r}" for v in runs[count]))
    return result


SUITES = {
    "gauss-bonnet": gauss_bonnet,
    "volume": volume_agreement,
    "parity": parity,
    "pfaffian": pfaffian_agreement,
    "block-inverse": block_inverse,
    "volume-form": volume_form,
    "validate-zoo": validate_zoo,
    "determinism": determinism,
}
