from monopro.cli import main
import sys

sys.exit(main())
