use pyo3::prelude::*;
use pyo3::types::PyModule;

#[test]
fn module_evaluates_m3_from_python() {
    Python::initialize();
    Python::attach(|py| {
        let m = PyModule::new(py, "invpress").unwrap();
        invpress::invpress(&m).unwrap();
        py.import("sys")
            .unwrap()
            .getattr("modules")
            .unwrap()
            .set_item("invpress", &m)
            .unwrap();
        py.run(
            c"
import invpress, json, math
m3 = invpress.ControlSystem.m3()
est = invpress.pressure_inner(m3, [1.0, 0.0], 1, 8)
assert abs(est.value - 0.5) < 1e-12, est
assert est.per_n[1][2] == math.e
assert json.loads(est.to_json())['tail_slope'] == est.tail_slope
try:
    invpress.pressure_inner(m3, [1.0], 1, 3)
    raise AssertionError('weight length accepted')
except ValueError:
    pass
",
            None,
            None,
        )
        .unwrap();
    });
}
