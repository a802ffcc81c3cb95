"""Allow ``python -m capbound``."""

import sys

from .cli import main

sys.exit(main())
