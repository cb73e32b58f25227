import sys

from dotenv import load_dotenv

load_dotenv()

from curvednet.logging_config import setup_logging  # noqa: E402
from curvednet.cli import main  # noqa: E402

setup_logging()
sys.exit(main())
