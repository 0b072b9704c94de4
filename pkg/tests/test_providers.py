"""Provider gateway: mock determinism, spy records, remote adapters, config."""

from __future__ import annotations

import json

import httpx
import pytest

from storyspace.errors import ConfigurationError, ContractError, ProtocolError, ProviderError
from storyspace.prompting import SEGMENT_ORDER, PromptEnvelope
from storyspace.providers import (
    MockChatProvider,
    MockVisionProvider,
    PlaceholderImageProvider,
    ProviderConfig,
    RemoteChatProvider,
    RemoteEmbedProvider,
    RemoteImageProvider,
    keyed_digest,
    make_chat_provider,
)


def envelope(ctx="the context", qry="the query", persona="the persona", instr="the instruction"):
    return PromptEnvelope.build(ctx, qry, persona, instr)


class TestPromptEnvelope:
    def test_segment_order_enforced(self):
        with pytest.raises(ContractError):
            PromptEnvelope((("QRY", "q"), ("CTX", "c"), ("PERSONA", "p"), ("INSTR", "i")))

    def test_missing_segment_rejected_before_any_call(self):
        chat = MockChatProvider(seed=1)
        with pytest.raises(ContractError):
            PromptEnvelope((("CTX", "c"), ("QRY", "q"), ("PERSONA", "p")))
        assert chat.call_count() == 0

    def test_wire_round_trip(self):
        env = envelope(ctx="line one\nline two", qry="", persona="p", instr="i\n")
        parsed = PromptEnvelope.parse_wire(env.render_wire())
        assert parsed.segments == env.segments


class TestMockChat:
    def test_fixed_envelope_identical_across_calls(self):
        chat = MockChatProvider(seed=1)
        env = envelope()
        assert chat.complete(env) == chat.complete(env)

    def test_reply_embeds_all_four_segment_digests(self):
        chat = MockChatProvider(seed=5)
        env = envelope()
        reply = chat.complete(env)
        for tag in SEGMENT_ORDER:
            assert f"{tag.lower()}:{keyed_digest(env.text(tag), 5)}" in reply

    def test_reply_echoes_query_content_tokens(self):
        chat = MockChatProvider(seed=5)
        reply = chat.complete(envelope(qry="the owl carried a letter"))
        assert "owl" in reply and "letter" in reply

    def test_different_seed_different_reply(self):
        env = envelope()
        assert MockChatProvider(seed=1).complete(env) != MockChatProvider(seed=2).complete(env)

    def test_captured_envelopes_exposed_in_order(self):
        chat = MockChatProvider(seed=1)
        first, second = envelope(qry="one"), envelope(qry="two")
        chat.complete(first)
        chat.complete(second)
        assert chat.captured == [first, second]
        assert [r.tags for r in chat.call_records] == [SEGMENT_ORDER, SEGMENT_ORDER]

    def test_configured_failure_is_recorded(self):
        chat = MockChatProvider(seed=1, fail_if=lambda env: "boom" in env.text("QRY"))
        with pytest.raises(ProviderError):
            chat.complete(envelope(qry="boom now"))
        assert chat.call_records[-1].outcome == "error"
        assert chat.complete(envelope(qry="fine")).startswith("ctx:")

    def test_rejects_non_envelope(self):
        with pytest.raises(TypeError):
            MockChatProvider(seed=1).complete("a bare string")  # type: ignore[arg-type]


class TestPlaceholderImage:
    def test_stable_token_per_prompt(self):
        img = PlaceholderImageProvider(seed=2)
        assert img.generate("owl on cliff") == img.generate("owl on cliff")
        assert img.generate("owl on cliff").startswith("img-")
        assert img.generate("owl on cliff") != img.generate("fox in snow")


class TestMockVision:
    def test_requires_priming(self):
        vlm = MockVisionProvider(seed=1)
        with pytest.raises(ProviderError):
            vlm.describe(1, 0.0)

    def test_descriptor_has_all_fields(self):
        vlm = MockVisionProvider(seed=1)
        vlm.prime(["Ana", "Bo"])
        record = vlm.describe(1, 10.0)
        assert set(record) == {"scenario", "light_shadow", "characters_present", "props"}
        assert set(record["characters_present"]) <= {"Ana", "Bo"}


class TestProviderConfig:
    def test_remote_requires_endpoint(self):
        with pytest.raises(ConfigurationError):
            ProviderConfig(kind="chat", backend="remote").validate()

    def test_unknown_kind_rejected(self):
        with pytest.raises(ConfigurationError):
            ProviderConfig(kind="weather").validate()

    def test_factory_builds_mock_by_default(self):
        provider = make_chat_provider(ProviderConfig(kind="chat", seed=9))
        assert isinstance(provider, MockChatProvider)
        assert provider.seed == 9


def _transport(handler):
    return httpx.Client(transport=httpx.MockTransport(handler))


class TestRemoteAdapters:
    def test_chat_round_trip(self):
        def handler(request):
            body = json.loads(request.content)
            assert request.url.path == "/chat"
            assert [s["tag"] for s in body["segments"]] == list(SEGMENT_ORDER)
            return httpx.Response(200, json={"text": "remote says hi"})

        chat = RemoteChatProvider("http://backend", client=_transport(handler))
        assert chat.complete(envelope()) == "remote says hi"
        assert chat.call_records[-1].outcome == "ok"

    def test_chat_timeout_is_retryable(self):
        def handler(request):
            raise httpx.ConnectTimeout("slow backend")

        chat = RemoteChatProvider("http://backend", client=_transport(handler))
        with pytest.raises(ProviderError) as err:
            chat.complete(envelope())
        assert err.value.retryable is True

    def test_chat_malformed_reply_is_protocol_error(self):
        chat = RemoteChatProvider(
            "http://backend",
            client=_transport(lambda r: httpx.Response(200, json={"message": "wrong key"})),
        )
        with pytest.raises(ProtocolError):
            chat.complete(envelope())

    def test_embed_dim_mismatch_is_configuration_error(self):
        embed = RemoteEmbedProvider(
            "http://backend", dim=4,
            client=_transport(lambda r: httpx.Response(200, json={"values": [1.0, 2.0]})),
        )
        with pytest.raises(ConfigurationError):
            embed.embed("hello")

    def test_embed_normalizes(self):
        embed = RemoteEmbedProvider(
            "http://backend", dim=2,
            client=_transport(lambda r: httpx.Response(200, json={"values": [3.0, 4.0]})),
        )
        vec = embed.embed("hello")
        assert abs(float(vec @ vec) - 1.0) < 1e-12

    def test_image_server_error_is_retryable(self):
        image = RemoteImageProvider(
            "http://backend", client=_transport(lambda r: httpx.Response(503))
        )
        with pytest.raises(ProviderError) as err:
            image.generate("a hill")
        assert err.value.retryable is True
