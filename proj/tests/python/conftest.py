import importlib.util
import os
import sys
from pathlib import Path

# Under ctest, import the module built in the build tree rather than any
# installed (possibly editable) copy.
stage = os.environ.get("NEUROBOOT_PY_STAGE")
if stage:
    pkg = Path(stage) / "neuroboot"
    core_path = next(pkg.glob("_core*.so"))
    core_spec = importlib.util.spec_from_file_location("neuroboot._core", core_path)
    core = importlib.util.module_from_spec(core_spec)
    core_spec.loader.exec_module(core)
    sys.modules["neuroboot._core"] = core
    spec = importlib.util.spec_from_file_location(
        "neuroboot", pkg / "__init__.py", submodule_search_locations=[str(pkg)])
    module = importlib.util.module_from_spec(spec)
    sys.modules["neuroboot"] = module
    spec.loader.exec_module(module)
