import sys

from geoshift.cli import main

sys.exit(main())
