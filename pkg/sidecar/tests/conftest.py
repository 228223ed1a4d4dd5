import sys
from pathlib import Path

# make the _glb helper importable regardless of pytest rootdir
sys.path.insert(0, str(Path(__file__).resolve().parent))
