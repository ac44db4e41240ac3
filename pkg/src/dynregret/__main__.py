import sys

from dynregret.cli import main

sys.exit(main())
