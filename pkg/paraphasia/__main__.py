import sys

from paraphasia.cli import main

sys.exit(main())
