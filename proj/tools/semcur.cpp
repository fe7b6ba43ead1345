#include "semcur/engine.hpp"
#include "semcur/error.hpp"
#include "semcur/runner.hpp"
#include "semcur/server.hpp"
#include "semcur/synthetic.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

namespace fs = std::filesystem;
using namespace semcur;

namespace
{
    std::optional<fs::path> opt_path(const std::string &s)
    {
        if (s.empty())
            return std::nullopt;
        return fs::path(s);
    }

    int cmd_replay(const std::string &transcript, const std::string &script, const std::string &config,
                   const std::string &out, double speed, const std::string &rounds)
    {
        RunOptions opts;
        opts.speed = speed;
        opts.round_boundaries = parse_rounds(rounds);
        const auto cfg = resolve_config(opt_path(config));
        const auto r = run_replay(transcript, opt_path(script), cfg, out, opts);
        std::cout << "events " << r.log.size() << ", snapshots " << r.snapshots.size() << "\n";
        write_metrics_text(std::cout, r.metrics);
        std::cout << "network: " << r.network.nodes.size() << " nodes, " << r.network.edges.size() << " edges in "
                  << r.network.components.size() << " components\n";
        return 0;
    }

    int cmd_serve(const std::string &config, int port, const std::string &address, const std::string &out,
                  const std::string &frames)
    {
        ServerOptions opts;
        opts.config = resolve_config(opt_path(config));
        opts.port = static_cast<unsigned short>(port >= 0 ? port : opts.config.port);
        opts.address = address;
        opts.frames_dir = frames;
        if (!out.empty())
        {
            fs::create_directories(out);
            opts.log_path = fs::path(out) / "session.jsonl";
        }
        else
            opts.log_path = opts.config.session_path;
        Server server(std::move(opts));
        server.start();
        std::cout << "listening on " << address << ":" << server.port() << std::endl;
        server.wait();
        return 0;
    }

    int cmd_export(const std::string &log_path, const std::string &kind, const std::string &out,
                   const std::string &rounds, std::size_t min_component, bool no_highlight)
    {
        const auto log = SessionLog::load(log_path);
        fs::create_directories(out);
        const auto boundaries = parse_rounds(rounds);
        if (kind == "metrics")
        {
            const auto m = compute_metrics(log, boundaries);
            write_metrics_files(out, m);
            write_metrics_text(std::cout, m);
            std::ofstream summary(fs::path(out) / "interactions.txt");
            const auto shares = interaction_summary(log, boundaries);
            summary << "round\tslot\tcount\tshare\n";
            for (std::size_t i = 0; i < shares.size(); ++i)
                for (const auto &[slot, count] : shares[i].counts)
                    summary << (i + 1) << '\t' << slot << '\t' << count << '\t' << round3(shares[i].share(slot))
                            << '\n';
        }
        else if (kind == "network")
        {
            const auto net = export_network(log, min_component, !no_highlight);
            write_network_files(out, net);
            std::cout << net.nodes.size() << " nodes, " << net.edges.size() << " edges\n";
        }
        else if (kind == "snapshots")
        {
            const auto r = replay(log);
            if (!r.identical)
                std::cerr << "warning: replay diverges from the log at seq " << r.first_divergence.value_or(-1)
                          << "\n";
            write_snapshots(fs::path(out) / "snapshots.jsonl", r.engine.snapshots());
            std::cout << r.engine.snapshots().size() << " snapshots\n";
        }
        else
            throw ValidationError("unknown export kind '" + kind + "'");
        return 0;
    }

    int cmd_genfix(std::uint64_t seed, int count, const std::string &out, double noise, bool text)
    {
        synthetic::Options opts;
        opts.noise_mm = noise;
        synthetic::write_fixture_set(out, seed, count, opts, !text);
        std::cout << "wrote " << count << " commits to " << out << "\n";
        return 0;
    }
}

int main(int argc, char **argv)
{
    CLI::App app{"semcur: conversation-driven tabletop curation engine"};
    app.require_subcommand(1);

    std::string transcript, script, config, out = "out", rounds = "3x480", log_path, kind = "metrics";
    std::string address = "127.0.0.1", frames = ".";
    double speed = 0.0, noise = 0.0;
    int port = -1, count = 1000;
    std::uint64_t seed = 42;
    std::size_t min_component = 6;
    bool no_highlight = false, text = false;

    auto *rep = app.add_subcommand("replay", "run a transcript and interaction script headlessly");
    rep->add_option("--transcript", transcript, "transcript JSONL")->required()->check(CLI::ExistingFile);
    rep->add_option("--script", script, "interaction script JSONL")->check(CLI::ExistingFile);
    rep->add_option("--config", config, "engine config JSON (default: $SEMCUR_CONFIG)");
    rep->add_option("--out", out, "output directory")->capture_default_str();
    rep->add_option("--speed", speed, "real-time multiplier, 0 = as fast as possible")->check(CLI::NonNegativeNumber);
    rep->add_option("--rounds", rounds, "rounds as NxSECONDS or a comma list of seconds")->capture_default_str();

    auto *srv = app.add_subcommand("serve", "run the websocket endpoint");
    srv->add_option("--config", config, "engine config JSON (default: $SEMCUR_CONFIG)");
    srv->add_option("--port", port, "listen port (default from config)");
    srv->add_option("--address", address, "listen address")->capture_default_str();
    srv->add_option("--out", out, "directory for the session log");
    srv->add_option("--frames", frames, "base directory for depth_commit frame_ref")->capture_default_str();

    auto *exp = app.add_subcommand("export", "derive metrics, network or snapshots from a session log");
    exp->add_option("--log", log_path, "session log")->required()->check(CLI::ExistingFile);
    exp->add_option("--kind", kind, "metrics | network | snapshots")->capture_default_str();
    exp->add_option("--out", out, "output directory")->capture_default_str();
    exp->add_option("--rounds", rounds, "rounds as NxSECONDS or a comma list of seconds")->capture_default_str();
    exp->add_option("--min-component", min_component, "drop components with this many nodes or fewer")->capture_default_str();
    exp->add_flag("--no-highlight", no_highlight, "do not mark curated nodes");

    auto *gen = app.add_subcommand("genfix", "write synthetic depth-frame fixtures with ground truth");
    gen->add_option("--seed", seed, "generator seed")->capture_default_str();
    gen->add_option("--count", count, "number of commits")->capture_default_str()->check(CLI::PositiveNumber);
    gen->add_option("--out", out, "output directory")->capture_default_str();
    gen->add_option("--noise", noise, "uniform depth noise amplitude in mm")->capture_default_str()->check(CLI::NonNegativeNumber);
    gen->add_flag("--text", text, "write depth frames as text instead of binary");

    CLI11_PARSE(app, argc, argv);

    try
    {
        if (rep->parsed())
            return cmd_replay(transcript, script, config, out, speed, rounds);
        if (srv->parsed())
            return cmd_serve(config, port, address, srv->count("--out") ? out : std::string{}, frames);
        if (exp->parsed())
            return cmd_export(log_path, kind, out, rounds, min_component, no_highlight);
        if (gen->parsed())
            return cmd_genfix(seed, count, out, noise, text);
    }
    catch (const std::exception &e)
    {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
