// Command-line front end for the low-delay video codec toolkit: encode,
// decode, metrics, bdrate, sweep and pipeline-sim subcommands. All numeric
// output is CSV on stdout; files are written only to explicitly given paths.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "lvc/codec.hpp"
#include "lvc/metrics.hpp"
#include "lvc/pipeline.hpp"

namespace {

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) lvc::fail("cli", "cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<uint8_t> read_binary_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary | std::ios::ate);
    if (!in) lvc::fail("cli", "cannot open '" + path + "'");
    std::vector<uint8_t> bytes(size_t(in.tellg()));
    in.seekg(0);
    in.read(reinterpret_cast<char*>(bytes.data()), std::streamsize(bytes.size()));
    if (!in) lvc::fail("cli", "read error on '" + path + "'");
    return bytes;
}

void write_binary_file(const std::string& path, const std::vector<uint8_t>& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) lvc::fail("cli", "cannot open '" + path + "' for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), std::streamsize(bytes.size()));
    if (!out) lvc::fail("cli", "write error on '" + path + "'");
}

struct ConfigFlags {
    int width = 0;
    int height = 0;
    lvc::CodecConfig cfg;
    std::string dr = "4";
    std::string di = "4";
    std::string latent = "1/5";
    std::string header = "naive";
    std::string warp = "overlap";
    std::string search = "full";

    void add_common(CLI::App* cmd, bool with_rate_knobs) {
        cmd->add_option("--width", width, "frame width in pixels")->required();
        cmd->add_option("--height", height, "frame height in pixels")->required();
        cmd->add_option("--gop", cfg.gop_size, "GoP size (frames per I-frame)");
        cmd->add_option("--block-size", cfg.block_size, "motion block size");
        if (with_rate_knobs) cmd->add_option("--dr", dr, "residual step, n or n/d");
        cmd->add_option("--di", di, "I-frame DC step, n or n/d");
        cmd->add_option("--latent-step", latent, "latent grid: 1, 1/5, 1/3 or exact");
        cmd->add_option("--streams", cfg.stream_count, "entropy stream count (1..1024)");
        cmd->add_option("--header", header, "stream header mode: naive or optimized");
        cmd->add_option("--warp", warp, "warp operator: dense, block or overlap");
        cmd->add_option("--search-range", cfg.search_range, "motion search range in pixels");
        cmd->add_option("--search", search, "motion search: full or diamond");
        cmd->add_option("--sigma", cfg.kernel_sigma, "overlap kernel sigma (default b/2)");
        cmd->add_option("--threads", cfg.threads, "entropy coder worker threads");
    }

    lvc::CodecConfig resolve() {
        cfg.residual_step = lvc::parse_rational(dr);
        cfg.iframe_step = lvc::parse_rational(di);
        if (latent == "1")
            cfg.latent = lvc::LatentMode::step_1;
        else if (latent == "1/5")
            cfg.latent = lvc::LatentMode::step_fifth;
        else if (latent == "1/3")
            cfg.latent = lvc::LatentMode::step_third;
        else if (latent == "exact")
            cfg.latent = lvc::LatentMode::exact16;
        else
            lvc::fail("cli", "--latent-step must be 1, 1/5, 1/3 or exact");
        if (header == "naive")
            cfg.header_mode = lvc::HeaderMode::naive;
        else if (header == "optimized")
            cfg.header_mode = lvc::HeaderMode::optimized;
        else
            lvc::fail("cli", "--header must be naive or optimized");
        if (warp == "dense")
            cfg.warp = lvc::WarpMode::dense;
        else if (warp == "block")
            cfg.warp = lvc::WarpMode::block;
        else if (warp == "overlap")
            cfg.warp = lvc::WarpMode::overlap;
        else
            lvc::fail("cli", "--warp must be dense, block or overlap");
        if (search == "full")
            cfg.search = lvc::SearchMethod::exhaustive;
        else if (search == "diamond")
            cfg.search = lvc::SearchMethod::diamond;
        else
            lvc::fail("cli", "--search must be full or diamond");
        cfg.validate();
        return cfg;
    }
};

lvc::RDPoint rd_point_for(const std::string& label, const std::vector<lvc::Frame420>& original,
                          const std::vector<lvc::Frame420>& decoded, size_t total_bits) {
    double my = 0, mu = 0, mv = 0, m611 = 0;
    for (size_t t = 0; t < original.size(); ++t) {
        my += lvc::mse_plane(original[t].y, decoded[t].y);
        mu += lvc::mse_plane(original[t].u, decoded[t].u);
        mv += lvc::mse_plane(original[t].v, decoded[t].v);
        m611 += lvc::distortion_yuv611(original[t], decoded[t]).mse;
    }
    const double n = double(original.size());
    lvc::RDPoint p;
    p.label = label;
    p.bpp = double(total_bits) /
            (double(original[0].width) * double(original[0].height) * n);
    p.psnr_y = lvc::psnr_from_mse(my / n);
    p.psnr_u = lvc::psnr_from_mse(mu / n);
    p.psnr_v = lvc::psnr_from_mse(mv / n);
    p.psnr_yuv611 = lvc::psnr_from_mse(m611 / n);
    return p;
}

int run_encode(ConfigFlags& flags, const std::string& input, const std::string& output) {
    const lvc::CodecConfig cfg = flags.resolve();
    const auto frames = lvc::read_yuv420(input, flags.width, flags.height);
    if (frames.empty()) lvc::fail("cli", "input holds no frames");
    const lvc::EncodedVideo enc = lvc::encode_video(frames, cfg);
    write_binary_file(output, enc.bitstream);

    std::printf("frame,type,bits,flow_bits,residual_bits\n");
    for (size_t t = 0; t < enc.frames.size(); ++t)
        std::printf("%zu,%c,%zu,%zu,%zu\n", t, enc.frames[t].type, enc.frames[t].bits,
                    enc.frames[t].flow_bits, enc.frames[t].residual_bits);
    std::printf("total_bits,%zu\n", enc.total_bits());
    std::printf("bpp,%.8f\n", double(enc.total_bits()) /
                                  (double(flags.width) * double(flags.height) *
                                   double(frames.size())));
    return 0;
}

int run_decode(const std::string& input, const std::string& output,
               const std::string& dump_prefix, int threads) {
    std::vector<uint8_t> bytes = read_binary_file(input);

    lvc::DebugHook hook = nullptr;
    if (!dump_prefix.empty()) {
        hook = [&dump_prefix](const lvc::PframeDebug& d) {
            char name[512];
            std::snprintf(name, sizeof name, "%s_f%04d_warped.pgm", dump_prefix.c_str(),
                          d.frame_index);
            lvc::write_pgm(d.warped.y, name);

            // Flow magnitude at block resolution, quarter-pel units.
            lvc::Plane mag(d.flow.blocks_x, d.flow.blocks_y);
            for (int by = 0; by < d.flow.blocks_y; ++by)
                for (int bx = 0; bx < d.flow.blocks_x; ++bx) {
                    const lvc::MotionVec& m = d.flow.at(by, bx);
                    mag.at(by, bx) = lvc::clamp_u8(
                        lvc::lround_half_away(std::hypot(double(m.x), double(m.y))));
                }
            std::snprintf(name, sizeof name, "%s_f%04d_flowmag.pgm", dump_prefix.c_str(),
                          d.frame_index);
            lvc::write_pgm(mag, name);

            lvc::Plane resid(d.residual.y.width, d.residual.y.height);
            for (size_t i = 0; i < resid.samples.size(); ++i)
                resid.samples[i] = lvc::clamp_u8(128L + d.residual.y.samples[i]);
            std::snprintf(name, sizeof name, "%s_f%04d_residual.pgm", dump_prefix.c_str(),
                          d.frame_index);
            lvc::write_pgm(resid, name);
        };
    }

    lvc::DecodedVideo dec = lvc::decode_stream(bytes, hook, threads);
    const size_t written = lvc::write_yuv420(dec.frames, output);
    std::printf("frames,%zu\n", dec.frames.size());
    std::printf("bytes_written,%zu\n", written);
    return 0;
}

int run_metrics(const std::string& ref_path, const std::string& test_path, int width,
                int height) {
    const auto ref = lvc::read_yuv420(ref_path, width, height);
    const auto test = lvc::read_yuv420(test_path, width, height);
    if (ref.size() != test.size())
        lvc::fail("metrics", "sequences differ in length: " + std::to_string(ref.size()) +
                                 " vs " + std::to_string(test.size()) + " frame(s)");
    if (ref.empty()) lvc::fail("metrics", "empty sequences");

    std::printf("frame,psnr_y,psnr_u,psnr_v,psnr_yuv611\n");
    double my = 0, mu = 0, mv = 0, m611 = 0;
    for (size_t t = 0; t < ref.size(); ++t) {
        const double py = lvc::mse_plane(ref[t].y, test[t].y);
        const double pu = lvc::mse_plane(ref[t].u, test[t].u);
        const double pv = lvc::mse_plane(ref[t].v, test[t].v);
        const auto d = lvc::distortion_yuv611(ref[t], test[t]);
        my += py;
        mu += pu;
        mv += pv;
        m611 += d.mse;
        std::printf("%zu,%s,%s,%s,%s\n", t, lvc::format_psnr(lvc::psnr_from_mse(py)).c_str(),
                    lvc::format_psnr(lvc::psnr_from_mse(pu)).c_str(),
                    lvc::format_psnr(lvc::psnr_from_mse(pv)).c_str(),
                    lvc::format_psnr(d.psnr).c_str());
    }
    const double n = double(ref.size());
    std::printf("average,%s,%s,%s,%s\n", lvc::format_psnr(lvc::psnr_from_mse(my / n)).c_str(),
                lvc::format_psnr(lvc::psnr_from_mse(mu / n)).c_str(),
                lvc::format_psnr(lvc::psnr_from_mse(mv / n)).c_str(),
                lvc::format_psnr(lvc::psnr_from_mse(m611 / n)).c_str());
    return 0;
}

int run_bdrate(const std::string& ref_csv, const std::string& test_csv, double fps, int width,
               int height, double filter_rate, bool filter_enabled) {
    const auto ref = lvc::parse_rd_csv(read_text_file(ref_csv));
    const auto test = lvc::parse_rd_csv(read_text_file(test_csv));
    lvc::BdOptions opt;
    if (filter_enabled) {
        opt.max_mbps = filter_rate;
        opt.fps = fps;
        opt.width = width;
        opt.height = height;
    }
    std::printf("bd_rate_percent,%.6f\n", lvc::bd_rate(ref, test, opt));
    return 0;
}

int run_sweep(ConfigFlags& flags, const std::string& input, const std::string& dr_list,
              const std::string& label) {
    std::vector<std::string> steps;
    std::stringstream ss(dr_list);
    std::string item;
    while (std::getline(ss, item, ','))
        if (!item.empty()) steps.push_back(item);
    if (steps.empty()) lvc::fail("cli", "--dr-list holds no steps");

    const auto frames = lvc::read_yuv420(input, flags.width, flags.height);
    if (frames.empty()) lvc::fail("cli", "input holds no frames");

    std::printf("%s\n", lvc::rd_csv_header().c_str());
    for (const std::string& step : steps) {
        flags.dr = step;
        const lvc::CodecConfig cfg = flags.resolve();
        const lvc::EncodedVideo enc = lvc::encode_video(frames, cfg);
        const lvc::DecodedVideo dec = lvc::decode_stream(enc.bitstream);
        const lvc::RDPoint p =
            rd_point_for(label + "dr=" + step, frames, dec.frames, enc.total_bits());
        std::printf("%s\n", lvc::to_csv_row(p).c_str());
    }
    return 0;
}

int run_pipeline_sim(const std::string& spec_path, const std::string& variants_path) {
    if (!variants_path.empty()) {
        std::vector<std::pair<std::string, lvc::PipelineSpec>> variants;
        std::istringstream in(read_text_file(variants_path));
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty() || line[0] == '#') continue;
            const size_t space = line.find(' ');
            if (space == std::string::npos)
                lvc::fail("cli", "variants file lines must be '<name> <spec path>'");
            const std::string name = line.substr(0, space);
            const std::string path = line.substr(space + 1);
            variants.emplace_back(name, lvc::parse_pipeline_spec(read_text_file(path)));
        }
        std::printf("name,steady_state_fps,makespan_ms\n");
        for (const auto& row : lvc::fps_report(variants))
            std::printf("%s,%.4f,%.4f\n", row.name.c_str(), row.fps, row.makespan_ms);
        return 0;
    }

    const lvc::PipelineSpec spec = lvc::parse_pipeline_spec(read_text_file(spec_path));
    const lvc::SimulationResult r = lvc::simulate(spec);
    std::printf("frame,stage,resource,start_ms,end_ms\n");
    for (const lvc::ScheduledStage& s : r.schedule)
        std::printf("%d,%s,%s,%.4f,%.4f\n", s.frame, spec.stages[size_t(s.stage)].name.c_str(),
                    spec.stages[size_t(s.stage)].resource.c_str(), s.start_ms, s.end_ms);
    for (const auto& [res, util] : r.utilization)
        std::printf("utilization,%s,%.6f\n", res.c_str(), util);
    std::printf("steady_state_fps,%.4f\n", r.steady_state_fps);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"low-delay P-frame video codec toolkit"};
    app.require_subcommand(1);

    ConfigFlags enc_flags;
    std::string enc_in, enc_out;
    CLI::App* enc = app.add_subcommand("encode", "encode a raw YUV420 file");
    enc->add_option("input", enc_in, "raw 8-bit YUV420 input")->required();
    enc->add_option("output", enc_out, "bitstream output path")->required();
    enc_flags.add_common(enc, true);

    std::string dec_in, dec_out, dump_prefix;
    int dec_threads = 1;
    CLI::App* dec = app.add_subcommand("decode", "decode a bitstream to raw YUV420");
    dec->add_option("input", dec_in, "bitstream input")->required();
    dec->add_option("output", dec_out, "raw YUV420 output path")->required();
    dec->add_option("--dump-debug", dump_prefix,
                    "write per-P-frame warped/flow/residual PGM files with this prefix");
    dec->add_option("--threads", dec_threads, "entropy coder worker threads");

    std::string met_ref, met_test;
    int met_w = 0, met_h = 0;
    CLI::App* met = app.add_subcommand("metrics", "per-frame PSNR between two YUV files");
    met->add_option("reference", met_ref)->required();
    met->add_option("test", met_test)->required();
    met->add_option("--width", met_w)->required();
    met->add_option("--height", met_h)->required();

    std::string bd_ref, bd_test;
    double bd_fps = 0.0, bd_limit = 1.3;
    int bd_w = 0, bd_h = 0;
    CLI::App* bd = app.add_subcommand("bdrate", "Bjontegaard delta-rate between two RD CSVs");
    bd->add_option("reference", bd_ref)->required();
    bd->add_option("test", bd_test)->required();
    CLI::Option* bd_fps_opt = bd->add_option("--fps", bd_fps, "frame rate for rate filtering");
    bd->add_option("--width", bd_w, "frame width for rate filtering");
    bd->add_option("--height", bd_h, "frame height for rate filtering");
    bd->add_option("--filter-rate", bd_limit, "discard points above this many Mb/s");

    ConfigFlags sweep_flags;
    std::string sweep_in, sweep_drs = "8,4,2,1", sweep_label;
    CLI::App* sw = app.add_subcommand("sweep", "encode at several residual steps, emit RD CSV");
    sw->add_option("input", sweep_in)->required();
    sw->add_option("--dr-list", sweep_drs, "comma-separated residual steps");
    sw->add_option("--label", sweep_label, "label prefix for CSV rows");
    sweep_flags.add_common(sw, false);

    std::string sim_spec, sim_variants;
    CLI::App* sim = app.add_subcommand("pipeline-sim", "simulate a decode pipeline spec");
    sim->add_option("spec", sim_spec, "pipeline spec file");
    sim->add_option("--variants", sim_variants, "file of '<name> <spec path>' lines");

    CLI11_PARSE(app, argc, argv);

    try {
        if (enc->parsed()) return run_encode(enc_flags, enc_in, enc_out);
        if (dec->parsed()) return run_decode(dec_in, dec_out, dump_prefix, dec_threads);
        if (met->parsed()) return run_metrics(met_ref, met_test, met_w, met_h);
        if (bd->parsed())
            return run_bdrate(bd_ref, bd_test, bd_fps, bd_w, bd_h, bd_limit, !bd_fps_opt->empty());
        if (sw->parsed()) return run_sweep(sweep_flags, sweep_in, sweep_drs, sweep_label);
        if (sim->parsed()) {
            if (sim_spec.empty() && sim_variants.empty())
                lvc::fail("cli", "pipeline-sim needs a spec file or --variants");
            return run_pipeline_sim(sim_spec, sim_variants);
        }
    } catch (const lvc::Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: cli: %s\n", e.what());
        return 1;
    }
    return 0;
}
