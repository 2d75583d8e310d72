import sys

from latmag.cli import main

sys.exit(main())
