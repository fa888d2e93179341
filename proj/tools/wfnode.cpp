#include <csignal>
#include <iostream>

#include <CLI11.hpp>

#include <wfchain/node/daemon.hpp>

using namespace wfchain;

namespace {

int keygen(const std::string& path)
{
    const auto keys = KeyPair::generate();
    node::write_key_file(path, keys);
    std::cout << keys.public_key().to_base64() << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"wfchain node daemon"};
    app.require_subcommand(0, 1);

    std::string config_path;
    bool mine = false;
    std::optional<unsigned> difficulty;
    std::optional<unsigned> depth;
    std::optional<std::string> design;
    app.add_option("--config", config_path, "node configuration file");
    app.add_flag("--mine", mine, "enable mining");
    app.add_option("--difficulty", difficulty, "leading zero bits")->check(CLI::Range(0, 32));
    app.add_option("--depth", depth, "confirmation depth K");
    app.add_option("--design", design, "engine design")->check(CLI::IsMember({"actions", "states"}));

    auto* kg = app.add_subcommand("keygen", "write a fresh key file and print its public key");
    std::string key_out;
    kg->add_option("file", key_out)->required();

    CLI11_PARSE(app, argc, argv);
    if (*kg) return keygen(key_out);
    if (config_path.empty()) {
        std::cerr << "--config is required\n";
        return 2;
    }

    try {
        auto config = node::load_config(config_path);
        if (mine) config.mining.enabled = true;
        if (difficulty) config.mining.difficulty = *difficulty;
        if (depth) config.confirmation_depth = *depth;
        if (design) config.design = engine::design_from_string(*design);
        const auto keys = node::load_key_file(config.key_file);

        sigset_t set;
        sigemptyset(&set);
        sigaddset(&set, SIGINT);
        sigaddset(&set, SIGTERM);
        pthread_sigmask(SIG_BLOCK, &set, nullptr);

        node::Daemon daemon(config, keys);
        daemon.start();
        std::cout << "node " << config.name << " api 127.0.0.1:" << daemon.api_port() << " p2p port "
                  << daemon.p2p_port() << std::endl;
        int sig = 0;
        sigwait(&set, &sig);
        daemon.stop();
        return 0;
    } catch (const node::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
