# lkengine/__init__.py
import logging
import os

from flask import Flask

from lkengine.extensions import workers


def create_app(config_name=None):
    app = Flask(__name__)

    # Configuration
    if config_name is None:
        config_name = os.getenv('LK_ENV', 'development')

    # Import config classes
    from lkengine.config import config
    app.config.from_object(config.get(config_name, config['development']))

    level = getattr(logging, str(app.config.get('LOG_LEVEL', 'WARNING')).upper(), logging.WARNING)
    app.logger.setLevel(level)
    logging.getLogger('lkengine').setLevel(level)

    # Initialize extensions
    workers.init_app(app)

    # Register commands
    from lkengine.cli import register_cli_commands
    register_cli_commands(app)

    return app
