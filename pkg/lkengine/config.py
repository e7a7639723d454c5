import os
from pathlib import Path

# Get the project root directory
basedir = Path(__file__).parent.parent


def _schedule(text):
    return tuple(float(e) for e in text.split(",") if e.strip())


class Config:
    """Base configuration class"""
    # Quadrature
    LK_MAX_NODES = int(os.environ.get('LK_MAX_NODES') or 2 ** 21)
    QUADRATURE_BASE_ORDER = int(os.environ.get('QUADRATURE_BASE_ORDER') or 12)
    QUADRATURE_ABS_TOL = float(os.environ.get('QUADRATURE_ABS_TOL') or 1e-8)
    QUADRATURE_REL_TOL = float(os.environ.get('QUADRATURE_REL_TOL') or 1e-7)
    QUADRATURE_CHUNK = 4096  # nodes per work unit; fixed so results do not depend on LK_WORKERS

    # Sweeps and sampling
    LK_WORKERS = int(os.environ.get('LK_WORKERS') or 1)
    EPS_SCHEDULE = _schedule(os.environ.get('EPS_SCHEDULE', '')) or tuple(2.0 ** -k for k in range(2, 10))
    SAMPLE_COUNT = 256

    # Tube oracle
    TUBE_CLOUD_POINTS = int(os.environ.get('TUBE_CLOUD_POINTS') or 1_000_000)
    TUBE_BATCH = 1_000_000

    LOG_LEVEL = os.environ.get('LOG_LEVEL', 'WARNING')


class DevelopmentConfig(Config):
    """Development configuration"""
    DEBUG = True
    LOG_LEVEL = os.environ.get('LOG_LEVEL', 'INFO')


class TestingConfig(Config):
    """Testing configuration"""
    TESTING = True
    LK_WORKERS = 1
    LK_MAX_NODES = 2 ** 21
    # smaller clouds keep the tube tests fast; accuracy comes from projection
    TUBE_CLOUD_POINTS = 40_000
    TUBE_BATCH = 250_000


class ProductionConfig(Config):
    """Production configuration"""
    DEBUG = False


# Configuration dictionary
config = {
    'development': DevelopmentConfig,
    'testing': TestingConfig,
    'production': ProductionConfig,
    'default': DevelopmentConfig
}
