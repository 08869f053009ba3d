import sys

from spinweave.cli import main

sys.exit(main())
