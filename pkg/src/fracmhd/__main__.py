import sys

from fracmhd.cli import main

sys.exit(main())
