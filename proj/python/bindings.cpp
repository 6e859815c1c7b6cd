#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "ssmred/forcing.hpp"
#include "ssmred/integrate.hpp"
#include "ssmred/manifold_fit.hpp"
#include "ssmred/normal_form.hpp"
#include "ssmred/pipeline.hpp"
#include "ssmred/response.hpp"
#include "ssmred/spectral.hpp"
#include "ssmred/trajectory_data.hpp"

namespace py = pybind11;
using namespace ssmred;

namespace {

ChartStyle parse_style(const std::string& s) {
    if (s == "modal-complex") return ChartStyle::ModalComplex;
    if (s == "modal-mechanical") return ChartStyle::ModalMechanical;
    if (s == "non-modal") return ChartStyle::NonModal;
    throw std::invalid_argument("unknown chart style '" + s + "'");
}

Trajectory traj_from_py(const std::pair<Vec, Mat>& t_states) {
    Trajectory traj;
    traj.times.assign(t_states.first.data(),
                      t_states.first.data() + t_states.first.size());
    traj.states = t_states.second;
    return traj;
}

std::pair<Vec, Mat> traj_to_py(const Trajectory& traj) {
    Vec t(static_cast<Eigen::Index>(traj.times.size()));
    for (std::size_t i = 0; i < traj.times.size(); ++i)
        t(static_cast<Eigen::Index>(i)) = traj.times[i];
    return {t, traj.states};
}

SsmRom fit_rom(const MechModel& model, const Spectrum& spectrum,
               const std::vector<std::pair<Vec, Mat>>& trajectories,
               const std::vector<int>& modes, const std::string& style, int order,
               int h_order, double transient_periods, int stride,
               int nonmodal_dof) {
    ChartStyle cs = parse_style(style);
    ChartBasis chart;
    if (cs == ChartStyle::NonModal) {
        Mat proj = dof_selector_projection(nonmodal_dof, model.n());
        chart = build_chart(spectrum, modes, cs, &proj);
    } else {
        chart = build_chart(spectrum, modes, cs);
    }
    ReducedDataset ds;
    ds.m = chart.m();
    for (const auto& tp : trajectories) {
        Trajectory traj = traj_from_py(tp);
        traj = truncate_transient(traj, chart, transient_periods);
        ds.trajectories.push_back(project(traj, chart, model, stride));
        ds.split.push_back("train");
    }
    differentiate(ds);
    SsmRom rom;
    rom.chart = chart;
    rom.v_nl = fit_parametrization(ds, chart, order);
    rom.r_nl = fit_reduced_dynamics(ds, chart, order);
    ResonanceStructure st = select_resonant_terms(chart.lambdas, order);
    rom.nf = fit_normal_form(ds, chart, st, h_order);
    return rom;
}

}  // namespace

PYBIND11_MODULE(_ssmred, mod) {
    mod.doc() = "Data-driven spectral-submanifold reduced-order models";

    py::class_<MechModel>(mod, "MechModel")
        .def(py::init<Mat, Mat, Mat>())
        .def_property_readonly("n", &MechModel::n)
        .def_property_readonly("M", &MechModel::M)
        .def_property_readonly("C", &MechModel::C)
        .def_property_readonly("K", &MechModel::K)
        .def_property_readonly("proportional", &MechModel::proportional)
        .def("observe", &MechModel::observe)
        .def("set_observable_dof", &MechModel::set_observable_dof)
        .def("energy", &MechModel::energy);

    mod.def("build_oscillator_chain", &build_oscillator_chain, py::arg("n_masses"),
            py::arg("stiffness"), py::arg("cubic"), py::arg("alpha") = 0.0,
            py::arg("beta") = 0.0);
    mod.def("modal_initial_condition", &modal_initial_condition);
    mod.def("static_solve", &static_solve);

    py::class_<Spectrum>(mod, "Spectrum")
        .def_readonly("eigenvalues", &Spectrum::eigenvalues)
        .def_readonly("proportional", &Spectrum::proportional)
        .def_readonly("alpha", &Spectrum::alpha)
        .def_readonly("beta", &Spectrum::beta)
        .def_readonly("omega0", &Spectrum::omega0)
        .def_property_readonly("n_pairs", &Spectrum::n_pairs);
    mod.def("compute_spectrum", &compute_spectrum);
    mod.def("spectral_gap", &spectral_gap);

    mod.def(
        "integrate",
        [](const MechModel& model, const Vec& x0, double t_end, double dt,
           double tol) { return traj_to_py(integrate(model, nullptr, x0, 0.0, t_end, tol, dt)); },
        py::arg("model"), py::arg("x0"), py::arg("t_end"), py::arg("dt"),
        py::arg("tol") = 1e-10);
    mod.def(
        "integrate_forced",
        [](const MechModel& model, const Vec& f0, double Omega, double eps,
           const Vec& x0, double t_end, double dt, double tol) {
            ForcingSpec spec = ForcingSpec::cosine(f0, Omega, eps);
            return traj_to_py(integrate(model, &spec, x0, 0.0, t_end, tol, dt));
        },
        py::arg("model"), py::arg("f0"), py::arg("Omega"), py::arg("eps"),
        py::arg("x0"), py::arg("t_end"), py::arg("dt"), py::arg("tol") = 1e-10);

    py::class_<SsmRom>(mod, "SsmRom")
        .def_property_readonly("m", [](const SsmRom& r) { return r.nf.m(); })
        .def_property_readonly("lambdas", [](const SsmRom& r) { return r.nf.lambdas; })
        .def_property_readonly(
            "conjugacy_residual",
            [](const SsmRom& r) { return r.nf.conjugacy_residual; });

    mod.def("fit_rom", &fit_rom, py::arg("model"), py::arg("spectrum"),
            py::arg("trajectories"), py::arg("modes"),
            py::arg("style") = "modal-complex", py::arg("order") = 3,
            py::arg("h_order") = 3, py::arg("transient_periods") = 1.0,
            py::arg("stride") = 1, py::arg("nonmodal_dof") = 0);

    mod.def(
        "backbone",
        [](const SsmRom& rom, const MechModel& model, double rho_max, int n_rho) {
            BackboneCurve bb = backbone(rom, model, rho_max, n_rho);
            Mat out(static_cast<Eigen::Index>(bb.samples.size()), 4);
            for (std::size_t i = 0; i < bb.samples.size(); ++i) {
                const auto& s = bb.samples[i];
                out.row(static_cast<Eigen::Index>(i)) << s.rho, s.omega, s.alpha, s.amp;
            }
            return out;
        },
        py::arg("rom"), py::arg("model"), py::arg("rho_max"), py::arg("n_rho") = 40,
        "columns: rho, omega, alpha, amp");

    mod.def(
        "continue_frc",
        [](const SsmRom& rom, const Spectrum& sp, const MechModel& model,
           const Vec& f0, double eps, double omega_lo, double omega_hi) {
            ForcedResponseProblem prob{&rom, &sp, &model, f0, eps};
            FRCBranch br = continue_frc(prob, omega_lo, omega_hi);
            Mat out(static_cast<Eigen::Index>(br.points.size()), 4);
            for (std::size_t i = 0; i < br.points.size(); ++i) {
                const auto& p = br.points[i];
                out.row(static_cast<Eigen::Index>(i))
                    << p.Omega, p.amp, p.phase,
                    (p.stability == Stability::Stable ? 1.0
                     : p.stability == Stability::Unstable ? -1.0 : 0.0);
            }
            return out;
        },
        py::arg("rom"), py::arg("spectrum"), py::arg("model"), py::arg("f0"),
        py::arg("eps"), py::arg("omega_lo"), py::arg("omega_hi"),
        "columns: omega, amp, phase, stability(+1/-1/0)");

    mod.def(
        "simulate_rom",
        [](const SsmRom& rom, const Spectrum& sp, const MechModel& model,
           const Vec& x0, double t_end, double dt, double tol) {
            return traj_to_py(simulate_rom(rom, sp, model, nullptr, x0, 0.0, t_end, dt, tol));
        },
        py::arg("rom"), py::arg("spectrum"), py::arg("model"), py::arg("x0"),
        py::arg("t_end"), py::arg("dt"), py::arg("tol") = 1e-10);
    mod.def(
        "simulate_rom_forced",
        [](const SsmRom& rom, const Spectrum& sp, const MechModel& model,
           const Vec& f0, double Omega, double eps, const Vec& x0, double t_end,
           double dt, double tol) {
            ForcingSpec spec = ForcingSpec::cosine(f0, Omega, eps);
            return traj_to_py(
                simulate_rom(rom, sp, model, &spec, x0, 0.0, t_end, dt, tol));
        },
        py::arg("rom"), py::arg("spectrum"), py::arg("model"), py::arg("f0"),
        py::arg("Omega"), py::arg("eps"), py::arg("x0"), py::arg("t_end"),
        py::arg("dt"), py::arg("tol") = 1e-10);

    mod.def("nmte", [](const std::pair<Vec, Mat>& pred, const std::pair<Vec, Mat>& ref) {
        return nmte(traj_from_py(pred), traj_from_py(ref));
    });
}
