import sys

from twint.cli import main

sys.exit(main())
