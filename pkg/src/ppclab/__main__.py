"""``python -m ppclab``."""

import sys

from .cli import main

sys.exit(main())
