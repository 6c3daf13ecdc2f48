import sys

from ncring.cli import main

sys.exit(main())
