import os
import sys
from pathlib import Path

# test-support modules (oracles, reference interpreter) live next to the tests
sys.path.insert(0, str(Path(__file__).parent))

# bundled scenes/plans are addressed relative to the repository root
os.chdir(Path(__file__).parent.parent)
