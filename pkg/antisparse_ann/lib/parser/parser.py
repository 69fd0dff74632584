"""Module providing a yaml and json parser for benchmark configs with pydantic validation"""
from typing import Any, Dict, Optional

import yaml

from antisparse_ann.lib.models.experiment_config import BenchConfig
from antisparse_ann.lib.utils.path_expander import PathExpander

PATH_FIELDS = ("base", "queries", "learn")


class Parser:
    """Class representing a yaml and json parser for the benchmark grid model"""
    def __init__(self, filename: str, expander: Optional[PathExpander] = None):
        self.filename: str = filename
        self.expander = expander or PathExpander()
        with open(self.filename, "r", encoding="utf-8") as config_file:
            # JSON is a subset of YAML, one loader serves both
            raw_data = yaml.safe_load(config_file) or {}
        # Validate before expanding so errors point at what the user wrote
        validated = BenchConfig.model_validate(raw_data)
        expanded: Dict[str, Any] = self._expand_dict(validated.model_dump(mode="json", exclude_none=True))
        self._model: BenchConfig = BenchConfig.model_validate(expanded)
        self._data: Dict[str, Any] = expanded

    def get_attr(self, attr_name: str) -> Optional[Any]:
        """Get an attribute from the parsed data"""
        return self._data.get(attr_name, None)

    def get_data(self) -> Dict[str, Any]:
        """Return the parsed (and already-expanded) data as a dictionary"""
        return self._data

    def _expand_dict(self, data: Dict[str, Any]) -> Dict[str, Any]:
        """Return a copy of data with dataset file paths and the output path expanded."""
        out: Dict[str, Any] = dict(data)
        dataset = dict(out.get("dataset", {}))
        for key in PATH_FIELDS:
            if isinstance(dataset.get(key), str):
                dataset[key] = self.expander.expand(dataset[key])
        out["dataset"] = dataset
        if isinstance(out.get("out"), str):
            out["out"] = self.expander.expand(out["out"])
        return out

    def get_model(self) -> BenchConfig:
        """Return the validated pydantic BenchConfig instance."""
        return self._model
