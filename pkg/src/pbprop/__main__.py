import sys

from pbprop.cli import main

sys.exit(main())
