import logging
import sys

from utils.config import config


def setup_logging():
    settings = config.get("Logging", {})
    logging.basicConfig(
        level=getattr(logging, str(settings.get("level", "INFO")).upper(), logging.INFO),
        format=settings.get("format", "%(asctime)s %(levelname)s %(name)s: %(message)s"),
    )


def main(argv=None):
    setup_logging()
    from scaling_cli import main as cli_main

    return cli_main(argv)


if __name__ == "__main__":
    sys.exit(main())
