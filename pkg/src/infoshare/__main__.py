import sys

from infoshare.cli import main

sys.exit(main())
