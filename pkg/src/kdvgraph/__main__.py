import sys

from kdvgraph.cli import main

sys.exit(main())
