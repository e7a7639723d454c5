#!/usr/bin/env python3
"""
Command-line entry point for the intrinsic volume engine

    python lk.py compute "zoo:sphere?r=1" --i 0
    python lk.py sweep zoo:warped_s2_over_s1 --i 1 --out runs/warped.csv
    python lk.py check gauss-bonnet
"""
import logging

from flask.cli import FlaskGroup

from lkengine import create_app

# Configure logging
logging.basicConfig(level=logging.WARNING, format='%(asctime)s - %(name)s - %(levelname)s - %(message)s')

cli = FlaskGroup(create_app=create_app, add_default_commands=False,
                 help="Lipschitz-Killing curvature engine.")

if __name__ == "__main__":
    cli()
