import sys

from freqbin.cli import main

sys.exit(main())
