import pytest

from permdyn import _kernels


@pytest.fixture(params=_kernels.available_backends())
def backend(request):
    """Kernel backend name; parametrizes over every backend built in this env."""
    return request.param
