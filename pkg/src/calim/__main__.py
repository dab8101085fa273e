import sys

from calim.cli import main

sys.exit(main())
