# Copyright (c) 2026 Petriflow Contributors
# SPDX-License-Identifier: Apache-2.0
"""setuptools bridge that delegates the extension build to CMake.

The CMake tree stages an importable package at <build>/python/petriflow;
this build_ext copies that staging area into the wheel/editable layout.
"""

import shutil
import subprocess
import sys
from pathlib import Path

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext

ROOT = Path(__file__).resolve().parent


class CMakeExtension(Extension):
    def __init__(self, name):
        super().__init__(name, sources=[])


class CMakeBuild(build_ext):
    def build_extension(self, ext):
        build_dir = ROOT / "build" / "py"
        build_dir.mkdir(parents=True, exist_ok=True)
        subprocess.check_call(
            [
                "cmake",
                "-S",
                str(ROOT),
                "-B",
                str(build_dir),
                "-DPETRIFLOW_BUILD_TESTS=OFF",
                f"-DPython3_EXECUTABLE={sys.executable}",
            ]
        )
        subprocess.check_call(
            ["cmake", "--build", str(build_dir), "--target", "petriflow_ext", "-j"]
        )
        staged = build_dir / "python" / "petriflow"
        # get_ext_fullpath already ends in <package dir>/_core.<abi>.so
        dest = Path(self.get_ext_fullpath(ext.name)).resolve().parent
        if dest == staged.resolve():
            return
        dest.mkdir(parents=True, exist_ok=True)
        for item in staged.glob("_core*"):
            shutil.copy2(item, dest / item.name)


setup(
    packages=["petriflow"],
    package_dir={"petriflow": "python/petriflow"},
    ext_modules=[CMakeExtension("petriflow._core")],
    cmdclass={"build_ext": CMakeBuild},
    zip_safe=False,
)
