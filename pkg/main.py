"""
Command-line entry point: ``python main.py <command> ...``.

Same commands as ``python -m cacgen``:

    python main.py generate scenes/two_cats.json --seeds 0,1,2 --heatmap-stride 10
    python main.py eval runs/two_cats scenes/two_cats_gt.json
    python main.py ablate --ratios 0,0.5,1.0 --count 8
    python main.py benchmark --kind composition --count 50
"""

import sys

from cacgen.cli import main

if __name__ == "__main__":
    sys.exit(main())
