#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "amp/ensembles.hpp"
#include "amp/experiments.hpp"
#include "amp/se.hpp"
#include "amp/spiked.hpp"

namespace py = pybind11;
using nlohmann::json;

namespace {

py::object to_py(const json& j) { return py::module_::import("json").attr("loads")(j.dump()); }
json from_py(const py::object& o) {
    return json::parse(py::module_::import("json").attr("dumps")(o).cast<std::string>());
}
amp::Prior prior_of(const py::object& o) { return amp::Prior::from_json(from_py(o)); }

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Approximate message passing: state evolution, algorithms and experiments";

    py::register_exception<amp::AmpError>(m, "AmpError", PyExc_RuntimeError);

    m.def("experiment_names", &amp::experiment_names);
    m.def("default_config", [](const std::string& name) { return to_py(amp::default_config(name)); }, py::arg("name"));
    m.def(
        "run_experiment",
        [](const std::string& name, const py::object& config, std::optional<std::uint64_t> seed,
           std::optional<std::string> out) {
            json cfg = config.is_none() ? json::object() : from_py(config);
            amp::ExperimentReport rep;
            {
                py::gil_scoped_release release;
                rep = amp::run_experiment(name, std::move(cfg), seed);
            }
            if (out) amp::write_report(rep, *out);
            py::dict d;
            d["experiment"] = rep.experiment;
            d["exit_code"] = rep.exit_code;
            d["summary"] = to_py(rep.summary);
            d["columns"] = rep.columns;
            d["rows"] = rep.rows;
            d["csv"] = rep.csv();
            return d;
        },
        py::arg("name"), py::arg("config") = py::none(), py::arg("seed") = py::none(), py::arg("out") = py::none());

    m.def("mmse", [](const py::object& prior, double rho) { return prior_of(prior).mmse(rho); }, py::arg("prior"),
          py::arg("rho"));
    m.def("bayes_map", [](const py::object& prior, double lambda, double rho) {
        return amp::bayes_map(prior_of(prior), lambda, rho);
    });
    m.def(
        "rho_star",
        [](const py::object& prior, double lambda, double rho0) {
            const amp::RhoFixedPoint fp = amp::rho_star(prior_of(prior), lambda, rho0);
            py::dict d;
            d["rho"] = fp.rho, d["residual"] = fp.residual, d["iterations"] = fp.iterations;
            d["degenerate"] = fp.degenerate, d["path"] = fp.path;
            return d;
        },
        py::arg("prior"), py::arg("lambda_"), py::arg("rho0") = 0.0);
    m.def("lasso_calibration", [](double lambda, double delta, double sigma, const py::object& prior) {
        return to_py(amp::lasso_calibration(lambda, delta, sigma, prior_of(prior)).to_json());
    });
    m.def("mest_fixed_point", [](const py::object& loss, const py::object& noise, double delta) {
        return to_py(amp::mest_fixed_point(amp::Loss::from_json(from_py(loss)), prior_of(noise), delta).to_json());
    });
    m.def("logistic_fixed_point", [](double kappa2, double delta) {
        return to_py(amp::logistic_fixed_point(kappa2, delta).to_json());
    });
    m.def("lambda_hat_from_eigenvalue", &amp::lambda_hat_from_eigenvalue);
    m.def(
        "sample_goe",
        [](Eigen::Index n, std::uint64_t seed, std::uint64_t stream) {
            amp::RngStream rng(seed, stream);
            return amp::sample_goe(n, rng);
        },
        py::arg("n"), py::arg("seed"), py::arg("stream") = 0);
    m.def(
        "leading_eigenpair",
        [](const amp::Mat& A) {
            const amp::EigenPair ep = amp::leading_eigenpair(A);
            return py::make_tuple(ep.value, ep.vector);
        },
        py::arg("A"));
}
