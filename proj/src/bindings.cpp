#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "interplab/gap.hpp"
#include "interplab/interpolators.hpp"
#include "interplab/model.hpp"

namespace py = pybind11;
using namespace interplab;

PYBIND11_MODULE(_core, m) {
    m.doc() = "Exact worst-case risk of norm-bounded interpolators";
    m.attr("__version__") = INTERPLAB_VERSION;

    // base first: translators are tried most-recently-registered first, so
    // usage-type errors surface as ValueError and the rest as RuntimeError
    py::register_exception<error>(m, "InterplabError", PyExc_RuntimeError);
    py::register_exception<usage_error>(m, "UsageError", PyExc_ValueError);

    py::class_<ProblemSpec>(m, "ProblemSpec")
        .def(py::init<>())
        .def(py::init([](index_t d_s, index_t d_j, double lam, double sigma2, dvec w_star_s) {
                 ProblemSpec sp;
                 sp.d_S = d_s;
                 sp.d_J = d_j;
                 sp.lambda = lam;
                 sp.sigma2 = sigma2;
                 sp.w_star_S = std::move(w_star_s);
                 sp.validate();
                 return sp;
             }),
             py::arg("d_s"), py::arg("d_j"), py::arg("lam"), py::arg("sigma2"),
             py::arg("w_star_s"))
        .def_readwrite("d_s", &ProblemSpec::d_S)
        .def_readwrite("d_j", &ProblemSpec::d_J)
        .def_readwrite("lam", &ProblemSpec::lambda)
        .def_readwrite("sigma2", &ProblemSpec::sigma2)
        .def_readwrite("w_star_s", &ProblemSpec::w_star_S)
        .def_property_readonly("p", &ProblemSpec::p)
        .def_property_readonly("junk_scale", &ProblemSpec::junk_scale)
        .def_property_readonly("trace_cov", &ProblemSpec::trace_cov)
        .def("validate", &ProblemSpec::validate)
        .def("w_star_full", &ProblemSpec::w_star_full)
        .def("covariance_diag", &ProblemSpec::covariance_diag)
        .def("__repr__", [](const ProblemSpec& sp) {
            return "ProblemSpec(d_s=" + std::to_string(sp.d_S) + ", d_j=" +
                   std::to_string(sp.d_J) + ", lam=" + std::to_string(sp.lambda) +
                   ", sigma2=" + std::to_string(sp.sigma2) + ")";
        });

    py::class_<SampleSet>(m, "SampleSet")
        .def_readwrite("X_S", &SampleSet::X_S)
        .def_readwrite("X_J", &SampleSet::X_J)
        .def_readwrite("Y", &SampleSet::Y)
        .def_readwrite("E", &SampleSet::E)
        .def_property_readonly("n", &SampleSet::n)
        .def_property_readonly("p", &SampleSet::p)
        .def("X", &SampleSet::X)
        .def("gram", &SampleSet::gram)
        .def_static("from_parts", &SampleSet::from_parts, py::arg("X_S"), py::arg("X_J"),
                    py::arg("Y"), py::arg("E"));

    m.def("sample_dataset",
          py::overload_cast<const ProblemSpec&, index_t, std::uint64_t>(&sample_dataset),
          py::arg("spec"), py::arg("n"), py::arg("seed"));

    m.def("lambda_of_n", &lambda_of_n, py::arg("schedule"), py::arg("n"));
    m.def("default_d_j", &default_d_j, py::arg("n"));
    py::enum_<LambdaSchedule>(m, "LambdaSchedule")
        .value("sqrt_n", LambdaSchedule::sqrt_n)
        .value("log_n", LambdaSchedule::log_n)
        .value("pow08", LambdaSchedule::pow08);

    py::class_<PopulationModel>(m, "PopulationModel")
        .def_readonly("sigma_diag", &PopulationModel::sigma_diag)
        .def_readonly("w_star", &PopulationModel::w_star)
        .def_readonly("sigma2", &PopulationModel::sigma2)
        .def_readonly("two_valued", &PopulationModel::two_valued)
        .def_property_readonly("p", &PopulationModel::p)
        .def_static("from_spec", &PopulationModel::from_spec, py::arg("spec"))
        .def_static("general", &PopulationModel::general, py::arg("sigma_diag"),
                    py::arg("w_star"), py::arg("sigma2"));

    m.def("population_risk",
          py::overload_cast<const dvec&, const PopulationModel&>(&population_risk),
          py::arg("w"), py::arg("model"));
    m.def("population_risk", py::overload_cast<const dvec&, const ProblemSpec&>(&population_risk),
          py::arg("w"), py::arg("spec"));
    m.def("empirical_risk", &empirical_risk, py::arg("w"), py::arg("sample"));

    py::enum_<PredictorKind>(m, "PredictorKind")
        .value("min_norm", PredictorKind::min_norm)
        .value("ridge_signal", PredictorKind::ridge_signal)
        .value("min_risk", PredictorKind::min_risk)
        .value("other", PredictorKind::other);

    py::class_<Predictor>(m, "Predictor")
        .def_readonly("w", &Predictor::w)
        .def_readonly("kind", &Predictor::kind)
        .def("signal_part", &Predictor::signal_part, py::arg("sample"))
        .def("junk_part", &Predictor::junk_part, py::arg("sample"));

    m.def("min_norm", &min_norm, py::arg("sample"));
    m.def("ridge_signal", &ridge_signal, py::arg("sample"), py::arg("lam"));
    m.def("min_risk", py::overload_cast<const SampleSet&, const ProblemSpec&>(&min_risk),
          py::arg("sample"), py::arg("spec"));
    m.def("min_risk", py::overload_cast<const SampleSet&, const PopulationModel&>(&min_risk),
          py::arg("sample"), py::arg("model"));
    m.def("flip_junk", &flip_junk, py::arg("sample"));

    py::enum_<GapMode>(m, "GapMode")
        .value("dense", GapMode::dense)
        .value("matrix_free", GapMode::matrix_free)
        .value("auto_select", GapMode::auto_select);
    py::enum_<GapPath>(m, "GapPath")
        .value("dense", GapPath::dense)
        .value("two_valued", GapPath::two_valued)
        .value("conjugate_gradient", GapPath::conjugate_gradient)
        .value("short_circuit", GapPath::short_circuit);

    py::class_<GapResult>(m, "GapResult")
        .def_readonly("value", &GapResult::value)
        .def_readonly("lambda_star", &GapResult::lambda_star)
        .def_readonly("kappa", &GapResult::kappa)
        .def_readonly("anchor_risk", &GapResult::anchor_risk)
        .def_readonly("excess_budget", &GapResult::excess_budget)
        .def_readonly("hard_case", &GapResult::hard_case)
        .def_readonly("degenerate", &GapResult::degenerate)
        .def_readonly("path", &GapResult::path)
        .def("__repr__", [](const GapResult& g) {
            return "GapResult(value=" + std::to_string(g.value) + ", lambda_star=" +
                   std::to_string(g.lambda_star) + ", kappa=" + std::to_string(g.kappa) + ")";
        });

    m.def("worst_case_gap", &worst_case_gap, py::arg("sample"), py::arg("model"),
          py::arg("anchor"), py::arg("B"), py::arg("mode") = GapMode::auto_select);
    m.def("brute_force_gap_oracle", &brute_force_gap_oracle, py::arg("sample"),
          py::arg("model"), py::arg("anchor"), py::arg("B"), py::arg("grid") = 10000);

    py::class_<MrDecomposition>(m, "MrDecomposition")
        .def_readonly("gap", &MrDecomposition::gap)
        .def_readonly("gamma_n", &MrDecomposition::gamma_n)
        .def_readonly("degenerate", &MrDecomposition::degenerate)
        .def_readonly("mr_norm2", &MrDecomposition::mr_norm2)
        .def_readonly("mn_norm2", &MrDecomposition::mn_norm2)
        .def_readonly("orthogonality_residual", &MrDecomposition::orthogonality_residual);
    m.def("gap_decomposition_mr", &gap_decomposition_mr, py::arg("sample"), py::arg("model"),
          py::arg("mode") = GapMode::auto_select);

    py::class_<BallDecomposition>(m, "BallDecomposition")
        .def_readonly("gap", &BallDecomposition::gap)
        .def_readonly("anchor_ld", &BallDecomposition::anchor_ld)
        .def_readonly("remainder", &BallDecomposition::remainder)
        .def_readonly("remainder_bound", &BallDecomposition::remainder_bound)
        .def_readonly("kernel_residual", &BallDecomposition::kernel_residual);
    m.def("gap_decomposition_ball", &gap_decomposition_ball, py::arg("sample"),
          py::arg("model"), py::arg("B"), py::arg("mode") = GapMode::auto_select);

    py::enum_<DeviationMode>(m, "DeviationMode")
        .value("dense", DeviationMode::dense)
        .value("matrix_free", DeviationMode::matrix_free)
        .value("lowrank", DeviationMode::lowrank);

    py::class_<BallGapBound>(m, "BallGapBound")
        .def_readonly("one_sided", &BallGapBound::one_sided)
        .def_readonly("two_sided", &BallGapBound::two_sided)
        .def_readonly("witness_gap", &BallGapBound::witness_gap)
        .def_readonly("witness", &BallGapBound::witness)
        .def_readonly("witness_valid", &BallGapBound::witness_valid);
    m.def("ball_gap_lower_bound", &ball_gap_lower_bound, py::arg("sample"), py::arg("model"),
          py::arg("mode") = DeviationMode::dense);

    m.def("kappa_limit_formula", &kappa_limit_formula, py::arg("X_S"), py::arg("lam"));

    py::class_<ClassicalBounds>(m, "ClassicalBounds")
        .def_readonly("rademacher", &ClassicalBounds::rademacher)
        .def_readonly("star_trace", &ClassicalBounds::star_trace)
        .def_readonly("star_kappa", &ClassicalBounds::star_kappa);
    m.def("classical_bounds", &classical_bounds, py::arg("B"), py::arg("n"),
          py::arg("trace_cov"), py::arg("kappa"));
}
