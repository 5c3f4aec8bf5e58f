import sys

from dsmc.cli import main

sys.exit(main())
