from belllab.cli import main
import sys
sys.exit(main())
