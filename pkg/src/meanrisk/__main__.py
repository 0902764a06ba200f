import sys

from meanrisk.cli import main

sys.exit(main())
