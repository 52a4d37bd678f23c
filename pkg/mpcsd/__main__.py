import sys

from mpcsd.cli import main

sys.exit(main())
