import sys

from arh1.cli import main

sys.exit(main())
