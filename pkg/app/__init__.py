from flask import Flask
import os
import logging
from dotenv import load_dotenv

# Load environment variables
load_dotenv()


def _log_level():
    level = os.getenv('EISPROD_LOG_LEVEL')
    if level:
        return getattr(logging, level.upper(), logging.INFO)
    return logging.INFO if os.getenv('FLASK_ENV') == 'production' else logging.DEBUG


def create_app(config=None):
    app = Flask(__name__)

    # Configuration
    app.config['EXPANSION_CACHE_DIR'] = os.getenv('EISPROD_CACHE_DIR') or None
    indent = os.getenv('EISPROD_JSON_INDENT')
    app.config['JSON_INDENT'] = int(indent) if indent else None
    app.config['SCHEMA_VERSION'] = 1
    app.config['SOLVER_SLACK_ROWS'] = int(os.getenv('EISPROD_SLACK_ROWS', 5))
    app.config['LOG_LEVEL'] = _log_level()
    if config:
        app.config.update(config)

    # Configure logging; standard output is reserved for JSON results
    logging.basicConfig(
        level=app.config['LOG_LEVEL'],
        format='%(asctime)s %(name)s %(levelname)s %(message)s'
    )

    # Register CLI commands
    from app.commands.jobs import jobs_bp

    app.register_blueprint(jobs_bp)

    return app
