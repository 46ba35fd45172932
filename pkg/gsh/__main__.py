import sys

from gsh.cli import main

sys.exit(main())
