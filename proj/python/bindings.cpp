#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>
#include <string>
#include <vector>

#include "dtn/api.hpp"
#include "dtn/ops.hpp"

namespace py = pybind11;

namespace {

// kwargs use the same keys as the config file; booleans normalize to 0/1.
dtn::RunConfig config_from_kwargs(const py::kwargs& kwargs) {
    dtn::RunConfig cfg;
    for (const auto& item : kwargs) {
        const std::string key = py::cast<std::string>(item.first);
        std::string value;
        if (py::isinstance<py::bool_>(item.second)) {
            value = py::cast<bool>(item.second) ? "1" : "0";
        } else {
            value = py::cast<std::string>(py::str(item.second));
        }
        dtn::apply_key_value(cfg, key, value);
    }
    return cfg;
}

py::dict report_to_dict(const dtn::EvalReport& report) {
    py::dict out;
    out["mean_accuracy"] = report.mean_accuracy;
    out["ci95"] = report.ci95 ? py::cast(*report.ci95) : py::none();
    out["episodes"] = report.episode_count;
    out["per_episode"] = report.per_episode;
    return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "few-shot classification via diversity-transfer feature generation";
    m.attr("__version__") = "0.1.0";

    py::register_exception<dtn::ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<dtn::ParseError>(m, "FormatError", PyExc_ValueError);

    py::class_<dtn::Dataset>(m, "Dataset")
        .def("__len__", [](const dtn::Dataset& ds) { return ds.items.size(); })
        .def_property_readonly("dim", [](const dtn::Dataset& ds) { return ds.dim; })
        .def_property_readonly("num_classes",
                               [](const dtn::Dataset& ds) { return ds.num_classes(); })
        .def_property_readonly("class_names",
                               [](const dtn::Dataset& ds) { return ds.class_names; });

    m.def(
        "gen_synthetic",
        [](std::size_t classes, std::size_t dim, std::size_t samples_per_class,
           std::size_t variation_dims, double variation_scale, double noise_scale,
           std::uint64_t seed) {
            dtn::SyntheticSpec spec{classes, dim,         samples_per_class,
                                    variation_dims, variation_scale, noise_scale, seed};
            return dtn::gen_synthetic(spec);
        },
        py::arg("classes") = 20, py::arg("dim") = 16, py::arg("samples_per_class") = 60,
        py::arg("variation_dims") = 6, py::arg("variation_scale") = 1.0,
        py::arg("noise_scale") = 0.3, py::arg("seed") = 7,
        "Synthetic dataset whose classes share one variation basis");

    m.def("split_by_counts", &dtn::split_by_counts, py::arg("dataset"), py::arg("train"),
          py::arg("val"), py::arg("test"), py::arg("merge_val") = false,
          "Assign splits by sorted label order");
    m.def("load_embeddings", &dtn::load_embeddings, py::arg("path"));
    m.def("save_embeddings", &dtn::save_embeddings, py::arg("dataset"), py::arg("path"));

    m.def(
        "oat_schedule",
        [](std::size_t unit_epochs, const std::vector<std::size_t>& gamma) {
            dtn::ScheduleSpec spec;
            spec.unit_epochs = unit_epochs;
            spec.gamma = gamma;
            return dtn::schedule_to_string(dtn::build_oat(spec));
        },
        py::arg("unit_epochs") = 5,
        py::arg("gamma") = std::vector<std::size_t>{0, 0, 1, 1, 2, 2});
    m.def(
        "at_schedule",
        [](std::size_t epochs, double decay, std::uint64_t seed) {
            dtn::ScheduleSpec spec;
            spec.kind = dtn::ScheduleKind::At;
            spec.total_epochs = epochs;
            spec.at_decay = decay;
            spec.seed = seed;
            return dtn::schedule_to_string(dtn::build_at(spec));
        },
        py::arg("epochs") = 30, py::arg("decay") = 0.9, py::arg("seed") = 0);
    m.def(
        "naive_schedule",
        [](std::size_t epochs) { return dtn::schedule_to_string(dtn::build_naive(epochs)); },
        py::arg("epochs"));
    m.def(
        "two_stage_schedule",
        [](std::size_t aux, std::size_t meta) {
            return dtn::schedule_to_string(dtn::build_two_stage(aux, meta));
        },
        py::arg("aux_epochs"), py::arg("meta_epochs"));

    m.def(
        "leaky_relu",
        [](const std::vector<double>& x, double slope) {
            dtn::Tape tape;
            return dtn::ops::leaky_relu(tape, dtn::Tensor::from(x, {x.size()}), slope).values();
        },
        py::arg("x"), py::arg("slope") = 0.2);
    m.def(
        "l2_normalize",
        [](const std::vector<std::vector<double>>& rows) {
            std::vector<double> flat;
            const std::size_t cols = rows.empty() ? 0 : rows.front().size();
            for (const auto& r : rows) flat.insert(flat.end(), r.begin(), r.end());
            dtn::Tape tape;
            dtn::Tensor out = dtn::ops::l2_normalize(
                tape, dtn::Tensor::matrix(std::move(flat), rows.size(), cols));
            std::vector<std::vector<double>> result(rows.size(), std::vector<double>(cols));
            for (std::size_t r = 0; r < rows.size(); ++r) {
                for (std::size_t c = 0; c < cols; ++c) result[r][c] = out.values()[r * cols + c];
            }
            return result;
        },
        py::arg("rows"));

    m.def(
        "train",
        [](const std::string& out_dir, const py::kwargs& kwargs) {
            dtn::RunConfig cfg = config_from_kwargs(kwargs);
            cfg.out_dir = out_dir;
            const dtn::TrainResult result = dtn::run_training(cfg);
            py::dict out;
            out["schedule"] = result.schedule_string;
            out["epochs"] = result.metrics.size();
            std::vector<double> losses;
            for (const auto& row : result.metrics) {
                losses.push_back(row.mean_loss.value_or(std::nan("")));
            }
            out["mean_losses"] = losses;
            out["checkpoint"] = result.checkpoint_path;
            return out;
        },
        py::arg("out_dir") = "",
        "Run a full training schedule; kwargs mirror the config-file keys");

    m.def(
        "evaluate_checkpoint",
        [](const std::string& checkpoint, const py::kwargs& kwargs) {
            dtn::RunConfig cfg = config_from_kwargs(kwargs);
            cfg.checkpoint_path = checkpoint;
            return report_to_dict(dtn::run_eval(cfg));
        },
        py::arg("checkpoint"),
        "Episodic evaluation of a saved checkpoint; kwargs mirror the config-file keys");
}
