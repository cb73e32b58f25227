"""
CurvedNet
=========
Command-line entry point for the curved-geometry anomaly recognition
toolkit.

Usage:
    python main.py gen-data --out data/
    python main.py train --data data/ --model output/hio.model
    python main.py score --model output/hio.model --data data/ --out output/scores.csv
    python main.py eval --scores output/scores.csv --out output/metrics.txt
"""

import sys
import logging

from dotenv import load_dotenv

load_dotenv()

from curvednet.logging_config import setup_logging  # noqa: E402
from curvednet.cli import main as cli_main  # noqa: E402

logger = logging.getLogger(__name__)


def main(argv=None):
    setup_logging()
    code = cli_main(argv)
    if code:
        logger.critical("Exited with code %d", code)
    return code


if __name__ == "__main__":
    sys.exit(main())
