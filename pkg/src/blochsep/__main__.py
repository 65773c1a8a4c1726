import sys

from blochsep.cli import main

sys.exit(main())
