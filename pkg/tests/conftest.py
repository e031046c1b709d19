import sys
from pathlib import Path

# allow running the suite from a source checkout without installing
_src = Path(__file__).resolve().parent.parent / "src"
if _src.is_dir() and str(_src) not in sys.path:
    try:
        import sartre  # noqa: F401
    except ImportError:
        sys.path.insert(0, str(_src))
