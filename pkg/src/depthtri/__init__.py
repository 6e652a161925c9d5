"""Depth-sensor quality metrics, multi-sensor trilateration and a synthetic ToF sensor."""

__version__ = "0.1.0"


def load_schema(name: str) -> dict:
    """Bundled JSON schema, e.g. ``load_schema("survey")`` for survey reports."""
    import json
    from importlib import resources

    return json.loads(resources.files(__name__).joinpath(f"schemas/{name}.schema.json").read_text())
