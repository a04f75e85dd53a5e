import sys

from treeirl.cli import main

sys.exit(main())
