import sys

from greenfield.app import run

sys.exit(run())
