import sys

from underreach.cli import main

sys.exit(main())
