import json
from typing import Any, Dict, Optional

from numpyencoder import NumpyEncoder


def dumps_params(params: Dict[str, Any], indent: Optional[int] = None) -> str:
    """Serializes ``params`` to JSON; numpy scalars and arrays are converted to plain values."""
    return json.dumps(params, cls=NumpyEncoder, indent=indent)
