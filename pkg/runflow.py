import logging
import sys

from config.loader import get_str_env
from cli import main

logging.basicConfig(
    level=getattr(logging, get_str_env("C2F_LOG_LEVEL", "INFO").upper(), logging.INFO),
    format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
)

logger = logging.getLogger(__name__)


if __name__ == "__main__":
    sys.exit(main())
