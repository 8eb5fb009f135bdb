import sys
from rimlab.cli import main
sys.exit(main())
