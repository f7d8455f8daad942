# main.py

import importlib
import logging
import os
import sys

from config import Config, app

logger = logging.getLogger("durkit")

COMMANDS_DIR = os.path.join(os.path.dirname(os.path.abspath(__file__)), "commands")


def load_commands():
    for filename in sorted(os.listdir(COMMANDS_DIR)):
        if filename.endswith(".py"):
            module_name = f"commands.{filename[:-3]}"
            try:
                importlib.import_module(module_name)
                logger.debug("✅ Loaded: %s", filename)
            except Exception as e:
                logger.error("❌ Failed to load %s: %s", filename, e)


def main(argv=None, stdout=None):
    load_commands()
    return app.dispatch(argv, stdout=stdout)


if __name__ == "__main__":
    logging.basicConfig(
        level=Config.LOG_LEVEL,
        stream=sys.stderr,
        format="%(levelname)s %(name)s: %(message)s",
    )
    sys.exit(main())
