import sys

from v2vsim.sim.cli import main

sys.exit(main())
