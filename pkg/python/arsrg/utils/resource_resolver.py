"""Resolving file paths within the project"""
from pathlib import Path

from arsrg.constants import BASEDIR
from arsrg.utils.logging_setup import logger

import arsrg
base_path = Path(arsrg.__file__).parents[2]


def get_resource(*parts, warn: bool = False) -> Path:
    """Returns a path up from the project root given a list of path parts.

    Args:
        parts: Path parts to add to the project root.
        warn (bool): If True will warn if a path does not exist, default False.

    Returns:
        Path: Path of project root plus parts, project root if none given.

    """
    if not parts:
        return base_path
    path = Path(base_path, *parts)
    if warn and not path.exists():
        logger.warning('%s does not exist', path)
    return path


def get_default_arsrg_cfg() -> Path:
    """Returns the path to the shipped config arsrg_cfg.yml

    Returns:
        Path: Path to default config arsrg_cfg.yml

    """
    return get_resource('configs', 'arsrg_cfg.yml', warn=True)


def get_user_arsrg_cfg() -> Path:
    """Returns the path to the per-user override arsrg_cfg.yml, which may not exist.

    Returns:
        Path: Path to the user config arsrg_cfg.yml

    """
    return Path(BASEDIR, 'arsrg_cfg.yml')


def get_arsrg_cfg() -> Path:
    """Returns the user config when present, otherwise the shipped default.

    Returns:
        Path: Path to the live config arsrg_cfg.yml

    """
    user_cfg = get_user_arsrg_cfg()
    if user_cfg.is_file():
        return user_cfg
    return get_default_arsrg_cfg()


def get_project_yml() -> Path:
    """Returns the path to the project.yml file

    Returns:
        Path: Path to project.yml
    """
    return get_resource('configs', 'project.yml')
