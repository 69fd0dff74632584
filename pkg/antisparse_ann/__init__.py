"""
Anti-sparse coding for approximate nearest neighbor search.

The version comes from the installed distribution metadata (setuptools_scm).
"""
try:
    from importlib.metadata import PackageNotFoundError, version
    __version__ = version("antisparse_ann")
except (ImportError, PackageNotFoundError):
    __version__ = "unknown"
