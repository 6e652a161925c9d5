import sys
from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings

sys.path.insert(0, str(Path(__file__).parent))

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture
def patch_frame():
    from depthtri.frames import DepthFrame

    from oracles import reference_patch

    return DepthFrame(reference_patch())
