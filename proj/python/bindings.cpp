#include <pybind11/pybind11.h>
PYBIND11_MODULE(_opsqa, m) { m.doc() = "opsqa core bindings"; }
