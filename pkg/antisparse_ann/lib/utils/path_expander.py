"""Module providing path expansion for dataset and result locations in experiment configs"""
import glob
import os
import re
from typing import Dict, Optional

DEFAULT_DATA_DIR = "~/.local/share/antisparse-ann/data"
DEFAULT_RESULTS_DIR = "./results"


class PathExpander:
    """Class to expand custom and environment variables in dataset paths"""
    def __init__(self, custom_vars: Optional[Dict[str, str]] = None):
        if custom_vars is None:
            custom_vars = {
                "HOME": os.path.expanduser("~"),
                "DATA_DIR": os.path.expanduser(os.environ.get("ASANN_DATA_DIR", DEFAULT_DATA_DIR)),
                "RESULTS_DIR": os.path.expanduser(os.environ.get("ASANN_RESULTS_DIR", DEFAULT_RESULTS_DIR)),
            }
        self.custom_vars: Dict[str, str] = custom_vars

    def expand(self, path: str) -> str:
        """Expand custom variables, environment variables and ${FIRST_MATCH='glob'} in the given path."""
        # Longest names first so $DATA_DIR is not eaten by a shorter key
        for key in sorted(self.custom_vars, key=len, reverse=True):
            path = path.replace(f"${{{key}}}", self.custom_vars[key])
            path = path.replace(f"${key}", self.custom_vars[key])
        path = os.path.expandvars(os.path.expanduser(path))
        # ${FIRST_MATCH='sift*'} picks the first sorted sibling matching the pattern
        match = re.search(r"\${FIRST_MATCH=['\"](.+?)['\"]}", path)
        if match:
            parent = os.path.dirname(path[:match.start()] + "x")
            candidates = sorted(glob.glob(os.path.join(parent, match.group(1))))
            if candidates:
                path = path.replace(match.group(0), os.path.basename(candidates[0]))
        return path
