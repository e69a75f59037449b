#include "dtn/data.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "dtn/errors.hpp"

namespace dtn {

namespace {

std::vector<double> gaussian_vector(std::size_t n, SeededRng& rng) {
    std::vector<double> v(n);
    for (double& x : v) x = rng.normal();
    return v;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

// Orthonormal dim x v_d basis via Gram-Schmidt on gaussian draws.
std::vector<std::vector<double>> variation_basis(std::size_t dim, std::size_t v_d,
                                                 SeededRng& rng) {
    std::vector<std::vector<double>> basis;
    while (basis.size() < v_d) {
        std::vector<double> v = gaussian_vector(dim, rng);
        for (const auto& u : basis) {
            const double proj = dot(v, u);
            for (std::size_t i = 0; i < dim; ++i) v[i] -= proj * u[i];
        }
        const double norm = std::sqrt(dot(v, v));
        if (norm < 1e-8) continue;  // rare near-dependent draw; redraw
        for (double& x : v) x /= norm;
        basis.push_back(std::move(v));
    }
    return basis;
}

std::string class_label(std::size_t index, std::size_t class_count) {
    std::size_t width = 2;
    for (std::size_t c = class_count - 1; c >= 100; c /= 10) ++width;
    char buf[32];
    std::snprintf(buf, sizeof(buf), "c%0*zu", static_cast<int>(width), index);
    return buf;
}

}  // namespace

std::vector<std::vector<double>> synthetic_variation_basis(const SyntheticSpec& spec) {
    SeededRng rng = SeededRng::stream(spec.seed, "synthetic");
    return variation_basis(spec.dim, spec.variation_dims, rng);
}

Dataset gen_synthetic(const SyntheticSpec& spec) {
    if (spec.variation_dims > spec.dim) {
        throw ConfigError("gen_synthetic: variation_dims " + std::to_string(spec.variation_dims) +
                          " exceeds dim " + std::to_string(spec.dim));
    }
    if (!(spec.variation_scale >= 0.0) || !(spec.noise_scale >= 0.0)) {
        throw ConfigError("gen_synthetic: scales must be non-negative");
    }

    SeededRng rng = SeededRng::stream(spec.seed, "synthetic");
    const auto basis = variation_basis(spec.dim, spec.variation_dims, rng);

    Dataset ds;
    ds.dim = spec.dim;
    for (std::size_t c = 0; c < spec.class_count; ++c) {
        ds.class_names.push_back(class_label(c, spec.class_count));

        std::vector<double> mu = gaussian_vector(spec.dim, rng);
        const double norm = std::sqrt(dot(mu, mu));
        for (double& v : mu) v = 4.0 * v / norm;

        for (std::size_t s = 0; s < spec.samples_per_class; ++s) {
            std::vector<double> x = mu;
            for (std::size_t d = 0; d < spec.variation_dims; ++d) {
                const double a = spec.variation_scale * rng.normal();
                for (std::size_t i = 0; i < spec.dim; ++i) x[i] += a * basis[d][i];
            }
            for (std::size_t i = 0; i < spec.dim; ++i) x[i] += spec.noise_scale * rng.normal();
            ds.items.push_back({std::move(x), static_cast<int>(c)});
        }
    }
    ds.class_split.assign(ds.num_classes(), Split::None);
    ds.rebuild_index();
    return ds;
}

Dataset load_embeddings(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("load_embeddings: cannot open '" + path + "'");

    std::string line;
    if (!std::getline(in, line)) throw ParseError(path + ":1: empty file");
    std::size_t dim = 0;
    {
        std::istringstream hs(line);
        std::string tag, version, dim_field;
        hs >> tag >> version >> dim_field;
        if (tag != "dtn-embed" || version != "v1" || dim_field.rfind("dim=", 0) != 0) {
            throw ParseError(path + ":1: expected header 'dtn-embed v1 dim=<D>', got '" + line +
                             "'");
        }
        try {
            dim = std::stoul(dim_field.substr(4));
        } catch (const std::exception&) {
            throw ParseError(path + ":1: bad dimension in header '" + dim_field + "'");
        }
        if (dim == 0) throw ParseError(path + ":1: dimension must be positive");
    }

    Dataset ds;
    ds.dim = dim;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::vector<std::string> fields;
        std::size_t start = 0;
        while (true) {
            const std::size_t comma = line.find(',', start);
            fields.push_back(line.substr(start, comma - start));
            if (comma == std::string::npos) break;
            start = comma + 1;
        }
        if (fields.size() != dim + 1) {
            throw ParseError(path + ":" + std::to_string(line_no) + ": expected " +
                             std::to_string(dim + 1) + " fields, got " +
                             std::to_string(fields.size()));
        }

        int cid = ds.class_id_of(fields[0]);
        if (cid < 0) {
            cid = static_cast<int>(ds.class_names.size());
            ds.class_names.push_back(fields[0]);
        }
        std::vector<double> x(dim);
        for (std::size_t d = 0; d < dim; ++d) {
            try {
                std::size_t used = 0;
                x[d] = std::stod(fields[d + 1], &used);
                if (used != fields[d + 1].size()) throw std::invalid_argument("trailing chars");
            } catch (const std::exception&) {
                throw ParseError(path + ":" + std::to_string(line_no) + ": bad value '" +
                                 fields[d + 1] + "' in field " + std::to_string(d + 2));
            }
            if (!std::isfinite(x[d])) {
                throw ParseError(path + ":" + std::to_string(line_no) +
                                 ": non-finite value in field " + std::to_string(d + 2));
            }
        }
        ds.items.push_back({std::move(x), cid});
    }

    ds.class_split.assign(ds.num_classes(), Split::None);
    ds.rebuild_index();
    return ds;
}

void save_embeddings(const Dataset& ds, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("save_embeddings: cannot open '" + path + "' for writing");
    out << "dtn-embed v1 dim=" << ds.dim << "\n";
    char buf[40];
    for (const auto& item : ds.items) {
        const std::string& label = ds.class_names[static_cast<std::size_t>(item.class_id)];
        if (label.find(',') != std::string::npos) {
            throw Error("save_embeddings: class label '" + label + "' contains a comma");
        }
        out << label;
        for (double v : item.x) {
            std::snprintf(buf, sizeof(buf), "%.17g", v);
            out << ',' << buf;
        }
        out << "\n";
    }
    if (!out) throw Error("save_embeddings: write to '" + path + "' failed");
}

}  // namespace dtn
