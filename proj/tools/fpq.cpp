// Copyright (C) 2026 fpq project
// SPDX-License-Identifier: Apache-2.0
//
// fpq: quantization pipelines and reports from the command line.
//
// Exit codes: 0 success, 1 numerical/domain error, 2 usage or I/O error.
// Failures print a machine-readable JSON object {"error": {...}} on stdout.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "fpq/analysis.hpp"
#include "fpq/gptq.hpp"
#include "fpq/linalg.hpp"
#include "fpq/lorc.hpp"
#include "fpq/parallel.hpp"
#include "fpq/quantize.hpp"
#include "fpq/scale_cast.hpp"
#include "fpq/tensor.hpp"
#include "fpq/tensor_io.hpp"

using json = nlohmann::ordered_json;

namespace {

struct stage_timer {
    std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }
};

// JSON has no literal for non-finite numbers; map them to null
json json_num(double v) {
    if (!std::isfinite(v)) return nullptr;
    return v;
}

std::string csv_num(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::vector<std::size_t> parse_shape(const std::string& text) {
    std::vector<std::size_t> dims;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const std::size_t next = text.find('x', pos);
        const std::string part =
            text.substr(pos, next == std::string::npos ? next : next - pos);
        std::size_t used = 0;
        unsigned long long v = 0;
        try {
            v = std::stoull(part, &used);
        } catch (...) {
            throw std::invalid_argument("bad shape '" + text + "'");
        }
        if (used != part.size() || v == 0)
            throw std::invalid_argument("bad shape '" + text + "'");
        dims.push_back(std::size_t(v));
        if (next == std::string::npos) break;
        pos = next + 1;
    }
    if (dims.empty()) throw std::invalid_argument("bad shape '" + text + "'");
    return dims;
}

std::pair<fpq::scale_constraint, std::size_t> parse_constraint(const std::string& text) {
    if (text == "none") return {fpq::scale_constraint::none, 1};
    if (text == "m1") return {fpq::scale_constraint::m1, 1};
    if (text == "m2") return {fpq::scale_constraint::m2, 1};
    if (text.rfind("m2:", 0) == 0) {
        std::size_t used = 0;
        unsigned long long v = 0;
        const std::string rows = text.substr(3);
        try {
            v = std::stoull(rows, &used);
        } catch (...) {
            throw std::invalid_argument("bad scale constraint '" + text + "'");
        }
        if (used != rows.size() || v == 0)
            throw std::invalid_argument("bad scale constraint '" + text + "'");
        return {fpq::scale_constraint::m2, std::size_t(v)};
    }
    throw std::invalid_argument("bad scale constraint '" + text +
                                "' (expected none, m1, m2 or m2:<rows>)");
}

const char* constraint_name(fpq::scale_constraint c) {
    switch (c) {
        case fpq::scale_constraint::none: return "none";
        case fpq::scale_constraint::m1: return "m1";
        case fpq::scale_constraint::m2: return "m2";
    }
    return "none";
}

json group_mse_summary(const std::vector<double>& per_group) {
    double mean = 0.0, worst = 0.0;
    for (double v : per_group) {
        mean += v;
        worst = std::max(worst, v);
    }
    if (!per_group.empty()) mean /= double(per_group.size());
    return json{{"groups", per_group.size()}, {"mean", mean}, {"max", worst}};
}

json error_report_json(const fpq::error_report& r, bool full_groups) {
    json j;
    j["mse"] = r.mse;
    j["max_abs_err"] = r.max_abs_err;
    j["sqnr_db"] = json_num(r.sqnr_db);
    j["proxy_loss"] = json_num(r.proxy_loss);
    if (full_groups) j["per_group_mse"] = r.per_group_mse;
    else j["group_mse"] = group_mse_summary(r.per_group_mse);
    return j;
}

void emit_report(const json& j, const std::string& path) {
    std::cout << j.dump(2) << "\n";
    if (!path.empty()) {
        std::ofstream out(path, std::ios::trunc);
        if (!out) throw fpq::io_error("cannot open '" + path + "' for writing");
        out << j.dump(2) << "\n";
        if (!out) throw fpq::io_error("write failed for '" + path + "'");
    }
}

// ---------------------------------------------------------------------------
// quantize: RTN or GPTQ, optional low-rank correction, optional scale
// constraint with an FP8 re-encode of constrained 4-bit fp codes

struct quantize_args {
    std::string spec_text;
    std::string input, calib, out, lorc_out, cast_out, report;
    bool use_gptq = false;
    std::size_t block = 128;
    double damping = 0.01;
    bool sequential = false;
    std::int64_t lorc_rank = -1;  // -1: no correction stage
    bool lorc_randomized = false;
    std::uint64_t seed = 7;
    std::string constraint_text = "none";
    std::string cast_target = "e5m2";
};

void run_quantize(const quantize_args& a) {
    const fpq::quant_spec spec = fpq::parse_quant_spec(a.spec_text);
    const auto [constraint, m2_rows] = parse_constraint(a.constraint_text);
    if (constraint != fpq::scale_constraint::none &&
        spec.constraint != fpq::scale_constraint::none)
        throw std::invalid_argument(
            "scale constraint given both in --spec and --scale-constraint");
    if (a.use_gptq && a.calib.empty())
        throw std::invalid_argument("--gptq needs calibration activations (--calib)");

    // the constraint is part of the recipe the quantizer solves against, not a
    // afterthought applied to finished codes
    fpq::quant_spec spec_eff = spec;
    if (constraint != fpq::scale_constraint::none) {
        spec_eff.constraint = constraint;
        spec_eff.m2_rows = m2_rows;
    }
    const fpq::scale_constraint eff_c = spec_eff.constraint;
    const std::size_t eff_rows = spec_eff.m2_rows;

    const fpq::tensor w = fpq::read_tensor_auto(a.input);
    fpq::tensor x;
    if (!a.calib.empty()) x = fpq::read_tensor_auto(a.calib);
    const fpq::tensor* calib = a.calib.empty() ? nullptr : &x;

    json cfg;
    cfg["spec"] = fpq::to_string(spec_eff);
    cfg["input"] = a.input;
    cfg["calib"] = a.calib;
    cfg["gptq"] = json{{"enabled", a.use_gptq},
                       {"block", a.block},
                       {"damping", a.damping},
                       {"sequential", a.sequential}};
    cfg["lorc"] = json{{"rank", a.lorc_rank},
                       {"randomized", a.lorc_randomized},
                       {"seed", a.seed}};
    cfg["scale_constraint"] = constraint_name(eff_c);
    cfg["m2_rows"] = eff_rows;
    cfg["cast_target"] = a.cast_target;
    cfg["threads"] = fpq::max_threads();

    json stages = json::array();
    json outputs = json::object();

    // stage 1: quantize (RTN or error-compensating solve)
    stage_timer t1;
    fpq::quantized_tensor q;
    if (a.use_gptq) {
        const fpq::hessian_state h = fpq::build_hessian(x, a.damping);
        fpq::solve_result sr = fpq::gptq_quantize(w, h, spec_eff, {a.block, a.sequential});
        q = std::move(sr.q);
    } else {
        q = fpq::quantize(w, spec_eff);
    }
    fpq::tensor recon = fpq::dequantize(q);
    {
        const fpq::error_report er =
            fpq::reconstruction_error_dense(w, recon, q.geometry(), calib);
        json st = json{{"name", a.use_gptq ? "gptq" : "rtn"},
                       {"frobenius_error", fpq::frobenius_diff(w, recon)}};
        st.update(error_report_json(er, false));
        st["time_s"] = t1.seconds();
        stages.push_back(st);
    }

    // stage 2: low-rank correction of the reconstruction error
    fpq::lorc_factors f;
    fpq::tensor corrected_view;  // recon + correction, kept for later stages
    const bool with_lorc = a.lorc_rank >= 0;
    if (with_lorc) {
        stage_timer t2;
        f = fpq::lorc_factorize(fpq::sub(w, recon), std::size_t(a.lorc_rank),
                                {a.lorc_randomized, 8, a.seed});
        corrected_view = fpq::add(recon, fpq::lorc_correction(f, w.rows(), w.cols()));
        const fpq::error_report er =
            fpq::reconstruction_error_dense(w, corrected_view, q.geometry(), calib);
        json st = json{{"name", "lorc"},
                       {"rank", f.rank},
                       {"captured_energy", f.captured_energy},
                       {"frobenius_error", fpq::frobenius_diff(w, corrected_view)}};
        st.update(error_report_json(er, false));
        st["time_s"] = t2.seconds();
        stages.push_back(st);
    }

    // stage 3: certify the stored scales against the power-of-two grid the
    // recipe demanded. The grid was enforced while solving, so this stage
    // checks bits rather than moving values; its error equals the previous
    // stage's by construction.
    if (eff_c != fpq::scale_constraint::none) {
        stage_timer t3;
        const fpq::group_geometry geo = q.geometry();
        std::size_t checked = 0;
        bool certified = true;
        if (eff_c == fpq::scale_constraint::m1) {
            for (double s : q.scales) {
                certified = certified && fpq::is_pow2(s);
                ++checked;
            }
        } else {
            for (std::size_t si = 0; si < q.scales.size();) {
                const auto [gb, ge] = fpq::m2_group_span(geo, eff_rows, si);
                double smax = 0.0;
                for (std::size_t i = gb; i < ge; ++i) smax = std::max(smax, q.scales[i]);
                int ea = 0, eb = 0;
                const double sig_max = std::frexp(smax, &ea);
                for (std::size_t i = gb; i < ge; ++i) {
                    certified = certified && std::frexp(q.scales[i], &eb) == sig_max &&
                                q.scales[i] <= smax;
                    ++checked;
                }
                si = ge;
            }
        }
        const fpq::tensor& corrected_now = with_lorc ? corrected_view : recon;
        const fpq::error_report er =
            fpq::reconstruction_error_dense(w, corrected_now, q.geometry(), calib);
        json st = json{{"name", "constrain"},
                       {"method", constraint_name(eff_c)},
                       {"m2_rows", eff_rows},
                       {"certified", certified},
                       {"scales_checked", checked},
                       {"frobenius_error", fpq::frobenius_diff(w, corrected_now)}};
        st.update(error_report_json(er, false));
        st["time_s"] = t3.seconds();
        stages.push_back(st);
    }

    if (!a.out.empty()) {
        fpq::write_quantized(a.out, q);
        outputs["quantized"] = a.out;
    }
    if (with_lorc && !a.lorc_out.empty()) {
        fpq::write_lorc(a.lorc_out, f);
        outputs["lorc"] = a.lorc_out;
    }

    // stage 4: exact re-encode of constrained 4-bit fp codes into 8-bit fp
    if (eff_c != fpq::scale_constraint::none && spec_eff.fam == fpq::family::fp_scaled &&
        spec_eff.bits == 4) {
        stage_timer t4;
        const fpq::cast_result cr =
            fpq::cast_group_to_fp8(q, fpq::minifloat_format::named(a.cast_target));
        const fpq::tensor recon8 = fpq::dequantize(cr.q);
        fpq::tensor corrected = recon8;
        if (with_lorc)
            corrected = fpq::add(recon8, fpq::lorc_correction(f, w.rows(), w.cols()));
        const fpq::error_report er =
            fpq::reconstruction_error_dense(w, corrected, cr.q.geometry(), calib);
        json st = json{{"name", "cast"},
                       {"target", a.cast_target},
                       {"saturations", cr.saturations},
                       {"value_exact", fpq::frobenius_diff(recon8, recon) == 0.0},
                       {"frobenius_error", fpq::frobenius_diff(w, corrected)}};
        st.update(error_report_json(er, false));
        st["time_s"] = t4.seconds();
        stages.push_back(st);
        if (!a.cast_out.empty()) {
            fpq::write_quantized(a.cast_out, cr.q);
            outputs["cast"] = a.cast_out;
        }
    }

    json rep;
    rep["command"] = "quantize";
    rep["config"] = cfg;
    rep["stages"] = stages;
    rep["outputs"] = outputs;
    emit_report(rep, a.report);
}

// ---------------------------------------------------------------------------
// compare: one row per recipe over the same weights

struct compare_args {
    std::string input, calib, csv, report;
    std::vector<std::string> specs;
};

void run_compare(const compare_args& a) {
    if (a.specs.size() < 2)
        throw std::invalid_argument("compare needs at least two --spec recipes");
    const fpq::tensor w = fpq::read_tensor_auto(a.input);
    fpq::tensor x;
    if (!a.calib.empty()) x = fpq::read_tensor_auto(a.calib);
    const fpq::tensor* calib = a.calib.empty() ? nullptr : &x;

    json rows = json::array();
    std::vector<fpq::error_report> reports;
    for (const std::string& text : a.specs) {
        const fpq::quant_spec spec = fpq::parse_quant_spec(text);
        const fpq::quantized_tensor q = fpq::quantize(w, spec);
        const fpq::error_report er = fpq::reconstruction_error(w, q, calib);
        reports.push_back(er);
        json row;
        row["spec"] = fpq::to_string(spec);
        row.update(error_report_json(er, true));
        rows.push_back(row);
    }

    if (!a.csv.empty()) {
        std::ofstream out(a.csv, std::ios::trunc);
        if (!out) throw fpq::io_error("cannot open '" + a.csv + "' for writing");
        out << "spec,mse,max_abs_err,sqnr_db,proxy_loss,group_mse_mean,group_mse_max\n";
        for (std::size_t i = 0; i < a.specs.size(); ++i) {
            const fpq::error_report& er = reports[i];
            const json gm = group_mse_summary(er.per_group_mse);
            out << rows[i]["spec"].get<std::string>() << ',' << csv_num(er.mse) << ','
                << csv_num(er.max_abs_err) << ',' << csv_num(er.sqnr_db) << ','
                << csv_num(er.proxy_loss) << ',' << csv_num(gm["mean"].get<double>()) << ','
                << csv_num(gm["max"].get<double>()) << '\n';
        }
        if (!out) throw fpq::io_error("write failed for '" + a.csv + "'");
    }

    json rep;
    rep["command"] = "compare";
    rep["config"] = json{{"input", a.input},
                         {"calib", a.calib},
                         {"specs", a.specs},
                         {"csv", a.csv},
                         {"threads", fpq::max_threads()}};
    rep["rows"] = rows;
    emit_report(rep, a.report);
}

// ---------------------------------------------------------------------------
// analyze / gen

struct analyze_args {
    std::string input, report;
    int bins = 100;
    bool demo_outlier = false;
};

void run_analyze(const analyze_args& a) {
    if (a.demo_outlier == !a.input.empty())
        throw std::invalid_argument("analyze needs exactly one of --input or --demo-outlier");
    const fpq::tensor t =
        a.demo_outlier ? fpq::outlier_demo_vector() : fpq::read_tensor_auto(a.input);
    const fpq::distribution_report r = fpq::summarize(t, a.bins);

    json rep;
    rep["command"] = "analyze";
    rep["config"] = json{{"input", a.demo_outlier ? "<demo-outlier>" : a.input},
                         {"bins", a.bins},
                         {"threads", fpq::max_threads()}};
    rep["summary"] = json{{"count", r.count},
                          {"min", r.min},
                          {"max", r.max},
                          {"mean", r.mean},
                          {"stddev", r.stddev},
                          {"skewness", r.skewness},
                          {"excess_kurtosis", r.excess_kurtosis},
                          {"outlier_count", r.outlier_count}};
    rep["histogram"] =
        json{{"lo", r.hist_lo}, {"width", r.hist_width}, {"counts", r.histogram}};
    emit_report(rep, a.report);
}

struct gen_args {
    std::string kind = "normal";
    std::string shape_text;
    std::string out;
    std::uint64_t seed = 0;
    double rate = 0.01;
    double magnitude = 6.0;
};

void run_gen(const gen_args& a) {
    const fpq::synth_kind kind = fpq::synth_kind_from_name(a.kind);
    const std::vector<std::size_t> dims = parse_shape(a.shape_text);
    fpq::synth_options opts;
    opts.outlier_rate = a.rate;
    opts.outlier_magnitude = a.magnitude;
    const fpq::tensor t = fpq::gen_synthetic(kind, dims, a.seed, opts);
    fpq::write_tensor_auto(a.out, t);

    json rep;
    rep["command"] = "gen";
    rep["config"] = json{{"kind", a.kind},
                         {"shape", dims},
                         {"seed", a.seed},
                         {"outlier_rate", a.rate},
                         {"outlier_magnitude", a.magnitude},
                         {"threads", fpq::max_threads()}};
    rep["outputs"] = json{{"tensor", a.out}};
    emit_report(rep, "");
}

// ---------------------------------------------------------------------------
// gptq / lorc / cast as standalone steps

struct gptq_args {
    std::string spec_text, input, calib, out, report;
    std::size_t block = 128;
    double damping = 0.01;
    bool sequential = false;
};

void run_gptq(const gptq_args& a) {
    const fpq::quant_spec spec = fpq::parse_quant_spec(a.spec_text);
    const fpq::tensor w = fpq::read_tensor_auto(a.input);
    const fpq::tensor x = fpq::read_tensor_auto(a.calib);

    stage_timer t;
    const fpq::hessian_state h = fpq::build_hessian(x, a.damping);
    const fpq::solve_result sr = fpq::gptq_quantize(w, h, spec, {a.block, a.sequential});
    const fpq::quantized_tensor base = fpq::rtn_baseline(w, spec);

    const double loss_gptq = fpq::proxy_loss(w, fpq::dequantize(sr.q), x);
    const double loss_rtn = fpq::proxy_loss(w, fpq::dequantize(base), x);

    json outputs = json::object();
    if (!a.out.empty()) {
        fpq::write_quantized(a.out, sr.q);
        outputs["quantized"] = a.out;
    }

    json rep;
    rep["command"] = "gptq";
    rep["config"] = json{{"spec", fpq::to_string(spec)},
                         {"input", a.input},
                         {"calib", a.calib},
                         {"block", a.block},
                         {"damping", a.damping},
                         {"sequential", a.sequential},
                         {"threads", fpq::max_threads()}};
    rep["hessian"] = json{{"features", h.features},
                          {"lambda", h.lambda},
                          {"diag_mean", h.diag_mean},
                          {"dead_columns",
                           std::count(h.dead.begin(), h.dead.end(), std::uint8_t(1))}};
    rep["proxy_loss"] = json{{"solver", loss_gptq}, {"rtn", loss_rtn}};
    rep["improved"] = loss_gptq <= loss_rtn;
    rep["time_s"] = t.seconds();
    rep["outputs"] = outputs;
    emit_report(rep, a.report);
}

struct lorc_args {
    std::string input, quantized, out, report;
    std::size_t rank = 8;
    bool randomized = false;
    std::uint64_t seed = 7;
};

void run_lorc(const lorc_args& a) {
    const fpq::tensor w = fpq::read_tensor_auto(a.input);
    const fpq::quantized_tensor q = fpq::read_quantized(a.quantized);

    stage_timer t;
    const fpq::tensor e = fpq::error_matrix(w, q);
    const fpq::lorc_factors f = fpq::lorc_factorize(e, a.rank, {a.randomized, 8, a.seed});
    const double before = fpq::frobenius_norm(e);
    const double after =
        fpq::frobenius_diff(e, fpq::lorc_correction(f, e.rows(), e.cols()));

    json outputs = json::object();
    if (!a.out.empty()) {
        fpq::write_lorc(a.out, f);
        outputs["lorc"] = a.out;
    }

    json rep;
    rep["command"] = "lorc";
    rep["config"] = json{{"input", a.input},
                         {"quantized", a.quantized},
                         {"rank", a.rank},
                         {"randomized", a.randomized},
                         {"seed", a.seed},
                         {"threads", fpq::max_threads()}};
    rep["captured_energy"] = f.captured_energy;
    rep["frobenius_error"] = json{{"before", before}, {"after", after}};
    rep["time_s"] = t.seconds();
    rep["outputs"] = outputs;
    emit_report(rep, a.report);
}

struct cast_args {
    std::string quantized, out, report;
    std::string target = "e5m2";
};

void run_cast(const cast_args& a) {
    const fpq::quantized_tensor q = fpq::read_quantized(a.quantized);

    stage_timer t;
    const fpq::cast_result cr =
        fpq::cast_group_to_fp8(q, fpq::minifloat_format::named(a.target));
    const double drift = fpq::frobenius_diff(fpq::dequantize(q), fpq::dequantize(cr.q));

    json outputs = json::object();
    if (!a.out.empty()) {
        fpq::write_quantized(a.out, cr.q);
        outputs["quantized"] = a.out;
    }

    json rep;
    rep["command"] = "cast";
    rep["config"] = json{{"quantized", a.quantized},
                         {"target", a.target},
                         {"threads", fpq::max_threads()}};
    rep["saturations"] = cr.saturations;
    rep["value_exact"] = cr.saturations == 0 && drift == 0.0;
    rep["frobenius_drift"] = drift;
    rep["time_s"] = t.seconds();
    rep["outputs"] = outputs;
    emit_report(rep, a.report);
}

json error_json(const char* type, const std::string& message) {
    return json{{"error", json{{"type", type}, {"message", message}}}};
}

}  // namespace

int main(int argc, char** argv) {
    fpq::init_threads_from_env();

    CLI::App app{"post-training quantization toolkit"};
    app.require_subcommand(1);

    quantize_args qa;
    CLI::App* q = app.add_subcommand("quantize", "quantize a weight tensor end to end");
    q->add_option("--spec", qa.spec_text, "recipe, e.g. fp4:e2m1:group256 or int8:asym:token")
        ->required();
    q->add_option("--input,-i", qa.input, "weight tensor (.bin or .csv)")->required();
    q->add_option("--calib,-c", qa.calib, "calibration activations (needed for --gptq)");
    q->add_option("--out,-o", qa.out, "output quantized tensor (.qt)");
    q->add_option("--lorc-out", qa.lorc_out, "output low-rank factors (.lorc)");
    q->add_option("--cast-out", qa.cast_out, "output of the FP8 re-encode (.qt)");
    q->add_option("--report", qa.report, "also write the JSON report here");
    q->add_flag("--gptq", qa.use_gptq, "error-compensating solver instead of RTN");
    q->add_option("--block", qa.block, "solver block size")->default_val(128);
    q->add_option("--damping", qa.damping, "Hessian damping fraction")->default_val(0.01);
    q->add_flag("--sequential", qa.sequential, "unblocked solver sweep (reference mode)");
    q->add_option("--lorc", qa.lorc_rank, "low-rank correction rank");
    q->add_flag("--lorc-randomized", qa.lorc_randomized, "sketched SVD for the correction");
    q->add_option("--seed", qa.seed, "seed for randomized steps")->default_val(7);
    q->add_option("--scale-constraint", qa.constraint_text, "none, m1, m2 or m2:<rows>")
        ->default_val("none");
    q->add_option("--cast-target", qa.cast_target, "8-bit format for the final re-encode")
        ->default_val("e5m2");
    q->callback([&] { run_quantize(qa); });

    compare_args ca;
    CLI::App* c = app.add_subcommand("compare", "error table across recipes");
    c->add_option("--input,-i", ca.input, "weight tensor")->required();
    c->add_option("--calib", ca.calib, "calibration activations for proxy loss");
    c->add_option("--spec", ca.specs, "recipe (repeat; at least two)")->required();
    c->add_option("--csv", ca.csv, "write the table as CSV here");
    c->add_option("--report", ca.report, "also write the JSON report here");
    c->callback([&] { run_compare(ca); });

    analyze_args aa;
    CLI::App* an = app.add_subcommand("analyze", "distribution summary of a tensor");
    an->add_option("--input,-i", aa.input, "tensor file");
    an->add_option("--bins", aa.bins, "histogram bins")->default_val(100);
    an->add_flag("--demo-outlier", aa.demo_outlier,
                 "analyze the built-in cluster-plus-outlier vector");
    an->add_option("--report", aa.report, "also write the JSON report here");
    an->callback([&] { run_analyze(aa); });

    gen_args ga;
    CLI::App* g = app.add_subcommand("gen", "generate synthetic tensors");
    g->add_option("--kind", ga.kind, "normal, outlier_injected or relu_skewed")
        ->default_val("normal");
    g->add_option("--shape", ga.shape_text, "dimensions, e.g. 512x512")->required();
    g->add_option("--seed", ga.seed, "stream seed")->default_val(0);
    g->add_option("--rate", ga.rate, "outlier fraction")->default_val(0.01);
    g->add_option("--magnitude", ga.magnitude, "outlier magnitude")->default_val(6.0);
    g->add_option("--out,-o", ga.out, "output tensor file")->required();
    g->callback([&] { run_gen(ga); });

    gptq_args pa;
    CLI::App* p = app.add_subcommand("gptq", "error-compensating solve with RTN comparison");
    p->add_option("--spec", pa.spec_text, "recipe")->required();
    p->add_option("--input,-i", pa.input, "weight tensor")->required();
    p->add_option("--calib,-c", pa.calib, "calibration activations")->required();
    p->add_option("--block", pa.block, "block size")->default_val(128);
    p->add_option("--damping", pa.damping, "damping fraction")->default_val(0.01);
    p->add_flag("--sequential", pa.sequential, "unblocked sweep (reference mode)");
    p->add_option("--out,-o", pa.out, "output quantized tensor (.qt)");
    p->add_option("--report", pa.report, "also write the JSON report here");
    p->callback([&] { run_gptq(pa); });

    lorc_args la;
    CLI::App* l = app.add_subcommand("lorc", "low-rank factors of a quantization error");
    l->add_option("--input,-i", la.input, "original weight tensor")->required();
    l->add_option("--quantized,-q", la.quantized, "quantized tensor (.qt)")->required();
    l->add_option("--rank,-r", la.rank, "factor rank")->required();
    l->add_flag("--randomized", la.randomized, "sketched SVD");
    l->add_option("--seed", la.seed, "sketch seed")->default_val(7);
    l->add_option("--out,-o", la.out, "output factors (.lorc)");
    l->add_option("--report", la.report, "also write the JSON report here");
    l->callback([&] { run_lorc(la); });

    cast_args xa;
    CLI::App* xc = app.add_subcommand("cast", "re-encode constrained 4-bit fp codes as FP8");
    xc->add_option("--quantized,-q", xa.quantized, "constrained 4-bit fp tensor (.qt)")
        ->required();
    xc->add_option("--target", xa.target, "e5m2 or e4m3")->default_val("e5m2");
    xc->add_option("--out,-o", xa.out, "output quantized tensor (.qt)");
    xc->add_option("--report", xa.report, "also write the JSON report here");
    xc->callback([&] { run_cast(xa); });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help and friends
        std::cout << error_json("usage", e.what()).dump(2) << "\n";
        return 2;
    } catch (const fpq::checksum_error& e) {
        std::cout << error_json("checksum", e.what()).dump(2) << "\n";
        return 2;
    } catch (const fpq::format_error& e) {
        std::cout << error_json("format", e.what()).dump(2) << "\n";
        return 2;
    } catch (const fpq::io_error& e) {
        std::cout << error_json("io", e.what()).dump(2) << "\n";
        return 2;
    } catch (const fpq::numerical_error& e) {
        std::cout << error_json("numerical", e.what()).dump(2) << "\n";
        return 1;
    } catch (const std::domain_error& e) {
        std::cout << error_json("domain", e.what()).dump(2) << "\n";
        return 1;
    } catch (const std::invalid_argument& e) {
        std::cout << error_json("usage", e.what()).dump(2) << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cout << error_json("internal", e.what()).dump(2) << "\n";
        return 1;
    }
    return 0;
}
