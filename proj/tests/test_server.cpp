#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "semcur/protocol.hpp"
#include "semcur/server.hpp"

#include <boost/asio/connect.hpp>
#include <boost/asio/ip/tcp.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>

#include <chrono>
#include <functional>

using namespace semcur;
namespace beast = boost::beast;
namespace net = boost::asio;
using tcp = net::ip::tcp;

namespace
{
    class Client
    {
    public:
        explicit Client(unsigned short port) : m_ws(m_ioc)
        {
            tcp::resolver resolver(m_ioc);
            net::connect(m_ws.next_layer(), resolver.resolve("127.0.0.1", std::to_string(port)));
            m_ws.handshake("127.0.0.1", "/");
        }

        ~Client()
        {
            beast::error_code ec;
            m_ws.close(beast::websocket::close_code::normal, ec);
        }

        void send(const std::string &text) { m_ws.write(net::buffer(text)); }

        json read()
        {
            beast::flat_buffer buf;
            m_ws.read(buf);
            return json::parse(beast::buffers_to_string(buf.data()));
        }

        /// Reads until `pred` accepts a message or the deadline passes.
        std::optional<json> await(const std::function<bool(const json &)> &pred, std::chrono::milliseconds limit)
        {
            const auto deadline = std::chrono::steady_clock::now() + limit;
            while (std::chrono::steady_clock::now() < deadline)
            {
                auto m = read();
                if (pred(m))
                    return m;
            }
            return std::nullopt;
        }

    private:
        net::io_context m_ioc;
        beast::websocket::stream<tcp::socket> m_ws;
    };
}

TEST_CASE("live round trip: say, see the post-it, pin it")
{
    ServerOptions opts;
    Server server(opts);
    server.start();
    REQUIRE(server.port() != 0);
    {
        Client client(server.port());
        const auto hello = client.read();
        CHECK(hello["type"] == "hello");
        CHECK(hello["v"] == protocol::version);

        client.send(protocol::encode(protocol::Say{"solar power"}));
        const auto spawn = client.await([](const json &m) { return m["type"] == "spawn"; }, std::chrono::seconds(2));
        REQUIRE(spawn);
        const auto id = (*spawn)["data"]["postit_id"].get<std::int64_t>();

        const auto frame = client.await(
            [&](const json &m) {
                if (m["type"] != "scene_frame")
                    return false;
                for (const auto &p : m["scene"]["postits"])
                    if (p["id"] == id)
                        return true;
                return false;
            },
            std::chrono::seconds(2));
        REQUIRE(frame);
        Vec2 pos;
        for (const auto &p : (*frame)["scene"]["postits"])
            if (p["id"] == id)
                pos = {p["position"]["x"].get<double>(), p["position"]["y"].get<double>()};

        protocol::Interact place;
        place.position = pos;
        place.footprint = {80, 80};
        place.participant = "p1";
        client.send(protocol::encode(place));
        const auto pinned = client.await(
            [](const json &m) { return m["type"] == "delta" && m["data"]["kind"] == "pinned"; },
            std::chrono::seconds(2));
        REQUIRE(pinned);
        CHECK((*pinned)["data"]["postit_ids"][0] == id);

        const auto after = client.await([](const json &m) { return m["type"] == "scene_frame"; },
                                         std::chrono::seconds(2));
        REQUIRE(after);
        CHECK((*after)["scene"]["postits"].empty());
        CHECK((*after)["scene"]["annotations"].size() == 1);

        client.send("{\"v\": 9, \"type\": \"say\", \"text\": \"x\"}");
        const auto err = client.await([](const json &m) { return m["type"] == "error"; }, std::chrono::seconds(2));
        CHECK(err);
    }
    server.stop();
}
