"""Allow `python -m projlab`."""

import sys

from projlab.cli import main

sys.exit(main())
